#!/usr/bin/env python3
"""Record API transcripts used by the UI test suite.

Drives the service's HTTP interface through a set of deterministic
scenarios and random walks, capturing the session view after every call
plus the final report JSON. The UI replays these to prove its rendering
matches the server's eligibility and status decisions step for step.
"""

from __future__ import annotations

import json
import random
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from riskscope.service import create_app, create_state

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "transcripts"

TOURIST_ANSWERS = [
    ("A0", "yes"),
    ("A1", "Answer common tourist questions at the visitor center of a local attraction."),
    ("A2", "Tourists visiting the attraction and the visitor-center staff assisting them."),
    ("A3", "Visitors acting on the agent's directions and staff fielding follow-up complaints."),
    ("A4", "The agent runs standalone on a kiosk; answers are shown directly to visitors."),
    ("A5", "Free-form questions typed or dictated by visitors, plus an internal FAQ document."),
    ("A6", "yes"),
    ("A7", "yes"),
    ("A8", "yes"),
    ("B1", "Not found in the documentation."),
    ("C1", "yes"),
]


def record(client: TestClient, name: str, actions: list[dict]) -> dict:
    steps = []
    view = client.post("/sessions", json={"use_title": name}).json()
    session_id = view["session_id"]
    steps.append({"action": {"type": "create"}, "view": view})
    for action in actions:
        if action["type"] == "answer":
            response = client.post(
                f"/sessions/{session_id}/answers",
                json={"question_id": action["question_id"], "value": action["value"]},
            )
        elif action["type"] == "attach":
            response = client.post(
                f"/sessions/{session_id}/profiles",
                json={"entity_kind": action["entity_kind"], "entity_id": action["entity_id"]},
            )
        else:
            raise ValueError(action["type"])
        response.raise_for_status()
        steps.append({"action": action, "view": response.json()})
    report = client.get(f"/sessions/{session_id}/report").json()
    return {"name": name, "steps": steps, "report": report}


def eligible_of(view: dict) -> list[str]:
    return [q["id"] for qn in view["questionnaires"] for q in qn["eligible_questions"]]


def random_walk(client: TestClient, rng: random.Random, name: str, max_steps: int) -> dict:
    view = client.post("/sessions", json={"use_title": name}).json()
    session_id = view["session_id"]
    steps = [{"action": {"type": "create"}, "view": view}]
    for _ in range(max_steps):
        eligible = eligible_of(view)
        if not eligible:
            break
        qid = rng.choice(eligible)
        question = next(
            q for qn in view["questionnaires"] for q in qn["eligible_questions"] if q["id"] == qid
        )
        if question["kind"] == "free-text":
            value = f"text-{rng.randrange(10_000)}"
        elif question["kind"] == "boolean":
            value = rng.choice(["yes", "no"])
        elif question["kind"] == "tri-state":
            value = rng.choice(["yes", "no", "unknown"])
        else:
            value = rng.choice(question["options"])
        response = client.post(
            f"/sessions/{session_id}/answers", json={"question_id": qid, "value": value}
        )
        response.raise_for_status()
        view = response.json()
        steps.append({"action": {"type": "answer", "question_id": qid, "value": value}, "view": view})
    report = client.get(f"/sessions/{session_id}/report").json()
    return {"name": name, "steps": steps, "report": report}


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as home:
        client = TestClient(create_app(create_state(Path(home))))
        transcripts = []

        transcripts.append(record(client, "empty-session", []))
        transcripts.append(
            record(
                client,
                "tourist-center",
                [{"type": "answer", "question_id": qid, "value": value} for qid, value in TOURIST_ANSWERS],
            )
        )
        transcripts.append(
            record(
                client,
                "screening-declined",
                [{"type": "answer", "question_id": "B1", "value": "no"}],
            )
        )
        transcripts.append(
            record(
                client,
                "screening-chain",
                [
                    {"type": "answer", "question_id": "B1", "value": "yes"},
                    {"type": "answer", "question_id": "B2", "value": "yes"},
                    {"type": "answer", "question_id": "B3", "value": "no"},
                ],
            )
        )

        donor = client.post("/sessions", json={"use_title": "profile donor"}).json()
        client.post(
            f"/sessions/{donor['session_id']}/answers", json={"question_id": "B1", "value": "unknown"}
        )
        client.post(
            f"/sessions/{donor['session_id']}/save-profile",
            json={"entity_kind": "model", "entity_id": "granite-3.1"},
        )
        transcripts.append(
            record(
                client,
                "attach-model-profile",
                [
                    {"type": "answer", "question_id": "A7", "value": "yes"},
                    {"type": "attach", "entity_kind": "model", "entity_id": "granite-3.1"},
                ],
            )
        )

        rng = random.Random(20260808)
        for index in range(15):
            transcripts.append(random_walk(client, rng, f"random-walk-{index:02d}", rng.randrange(1, 16)))

        for transcript in transcripts:
            path = OUT_DIR / f"{transcript['name']}.json"
            path.write_text(json.dumps(transcript, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print(f"wrote {len(transcripts)} transcripts to {OUT_DIR}")


if __name__ == "__main__":
    sys.exit(main())
