#!/usr/bin/env python3
"""Regenerates the synthetic grid and cm1_shaped corpora. Deterministic."""
import csv
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

NOUNS = [
    "waypoint", "route", "altitude", "battery", "sensor", "camera", "signal",
    "message", "operator", "mission", "obstacle", "boundary", "velocity",
    "temperature", "alarm", "display", "record", "schedule", "junction",
    "barrier", "door", "brake", "station", "track", "network", "packet",
    "buffer", "console", "panel", "gate",
]
VERBS = [
    "monitor", "record", "transmit", "display", "store", "validate",
    "calculate", "update", "report", "check",
]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def make_grid():
    rng = random.Random(7)
    out = os.path.join(HERE, "grid")
    os.makedirs(out, exist_ok=True)

    designs = []
    for i in range(60):
        noun = NOUNS[i % len(NOUNS)]
        verb = VERBS[i % len(VERBS)]
        designs.append((f"D{i+1:02d}",
                        f"The {noun} module shall {verb} the {noun} value and report the status."))

    reqs, links = [], []
    ridx = 0
    for dlength in (2, 3, 4):
        for _ in range(10):
            ridx += 1
            rid = f"R{ridx:02d}"
            linked = rng.sample(range(60), dlength)
            nouns = sorted({designs[d][1].split()[1] for d in linked})
            text = ("The system shall coordinate the " + " and the ".join(nouns) +
                    " during every mission phase.")
            reqs.append((rid, text))
            for d in linked:
                links.append((rid, designs[d][0]))

    write_csv(os.path.join(out, "requirements.csv"), ["id", "text"], reqs)
    write_csv(os.path.join(out, "designs.csv"), ["id", "text"], designs)
    write_csv(os.path.join(out, "rtm.csv"), ["req_id", "design_id"], links)


def make_cm1_shaped():
    rng = random.Random(11)
    out = os.path.join(HERE, "cm1_shaped")
    os.makedirs(out, exist_ok=True)

    designs = []
    for i in range(150):
        noun = NOUNS[i % len(NOUNS)]
        verb = VERBS[i % len(VERBS)]
        designs.append((f"SDS-{i+1:03d}",
                        f"The {noun} component shall {verb} each {noun} reading."))

    reqs, links = [], []
    for i in range(155):
        rid = f"SRS-{i+1:03d}"
        noun = NOUNS[(i * 3) % len(NOUNS)]
        reqs.append((rid, f"The instrument shall process the {noun} data within the required period."))
        links.append((rid, designs[rng.randrange(150)][0]))

    write_csv(os.path.join(out, "requirements.csv"), ["id", "text"], reqs)
    write_csv(os.path.join(out, "designs.csv"), ["id", "text"], designs)
    write_csv(os.path.join(out, "rtm.csv"), ["req_id", "design_id"], links)


if __name__ == "__main__":
    make_grid()
    make_cm1_shaped()
    print("fixtures written")
