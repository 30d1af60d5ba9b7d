"""Drive a full optimization session against a running ask-tell server.

Start the server first (`mixmobo serve --port 8321 --data-dir ./sessions`),
then run this script; it creates a session for a catalog problem, plays the
client side of the ask/tell loop with the analytic evaluator, and prints
the resulting fronts.

Usage:
    python scripts/demo_session.py --base-url http://127.0.0.1:8321 \
        --problem bnh --doe 10 --budget 30
"""

from __future__ import annotations

import argparse

import httpx

from mixmobo import benchmarks


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--base-url", default="http://127.0.0.1:8321")
    parser.add_argument("--problem", default="bnh")
    parser.add_argument("--doe", type=int, default=10)
    parser.add_argument("--budget", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    problem = benchmarks.builtin_problems()[args.problem]
    client = httpx.Client(base_url=args.base_url, timeout=120)
    created = client.post(
        "/v1/sessions",
        json={
            "version": 1,
            "name": f"demo-{args.problem}",
            "space": problem.space.to_dict(),
            "run": {
                "n_objectives": problem.n_objectives,
                "n_constraints": problem.n_constraints,
                "doe_size": args.doe,
                "budget": args.budget,
                "seed": args.seed,
            },
        },
    )
    created.raise_for_status()
    session_id = created.json()["session_id"]
    print(f"session {session_id} (relaxed dimension {created.json()['relaxed_dimension']})")

    while True:
        ask = client.get(f"/v1/sessions/{session_id}/ask")
        if ask.status_code == 410:
            break
        ask.raise_for_status()
        body = ask.json()
        point = problem.space.point_from_named(body["values"])
        f, g = problem.evaluate(point)
        told = client.post(
            f"/v1/sessions/{session_id}/tell",
            json={"token": body["token"], "f": [float(v) for v in f],
                  "g": [float(v) for v in g]},
        )
        told.raise_for_status()
        print(f"evaluated {told.json()['n_evaluated']}/{args.budget}", end="\r")

    results = client.get(f"/v1/sessions/{session_id}/results").json()
    print(f"\ndatabase front: {len(results['pf_database'])} points")
    print(f"predicted front: {len(results['predicted_pf'])} points")
    print(results["proximity"]["summary"])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
