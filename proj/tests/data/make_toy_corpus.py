#!/usr/bin/env python3
"""Deterministic generator for the bundled toy corpus (toy_corpus.jsonl)."""
import json
import random
import sys

TOPICS = {
    "optics": "lens laser photon beam mirror prism refract focus aperture spectrum wave coherent",
    "battery": "anode cathode lithium charge cell electrolyte voltage current capacity ion storage discharge",
    "genome": "gene dna sequence protein enzyme allele mutation expression rna codon splice chromosome",
    "network": "packet router protocol latency bandwidth node switch socket routing traffic link queue",
    "polymer": "monomer chain resin plastic fiber coating molecule bond elastic film layer composite",
    "robot": "actuator sensor gripper motor arm joint servo torque control path vision encoder",
    "fluid": "flow pump valve pressure turbine nozzle viscous channel vortex pipe jet laminar",
    "crypto": "cipher key hash signature encrypt secret token block nonce prime modulus verify",
}
COMMON = "the of and a to in is for with on by system method device using based first second".split()
# bridge words move from one topic's context to another over time
BRIDGES = [("fiber", "optics"), ("sensor", "network"), ("protein", "polymer"), ("key", "network")]

START, END = 2000, 2014


def main(out_path):
    rng = random.Random(20240611)
    topics = sorted(TOPICS)
    words = {t: TOPICS[t].split() for t in topics}
    creators = [f"c{i}" for i in range(1, 25)]
    home = {c: rng.sample(topics, 2) for c in creators}
    home["c7"] = ["optics", "polymer"]

    docs = []
    serial = 0
    for year in range(START, END + 1):
        slice_t = (year - START) // 5
        for _ in range(13):
            serial += 1
            background = rng.random() < 0.35
            team = rng.sample([c for c in creators if c != "c7"], rng.randint(2, 4))
            doc_topics = sorted({rng.choice(home[m]) for m in team})[:2]
            tokens = []
            for _ in range(rng.randint(40, 70)):
                r = rng.random()
                if r < 0.3:
                    tokens.append(rng.choice(COMMON))
                else:
                    topic = rng.choice(doc_topics)
                    tokens.append(rng.choice(words[topic]))
                    for bridge, target in BRIDGES:
                        if target == topic and rng.random() < 0.08 * slice_t:
                            tokens.append(bridge)
            docs.append({
                "doc_id": f"d{serial:04d}",
                "year": year,
                "text": " ".join(tokens),
                "creators": [] if background else team,
                "categories": [f"cat_{t}" for t in doc_topics],
                "outcome": round(rng.uniform(0, 10), 3),
                "split": "background" if background else "project",
            })

    # c7: two works in slice 0 and exactly three in slice 1
    c7_years = [2001, 2003, 2005, 2007, 2009]
    for year in c7_years:
        serial += 1
        tokens = [rng.choice(words["optics"] + words["polymer"] + COMMON) for _ in range(50)]
        docs.append({
            "doc_id": f"d{serial:04d}",
            "year": year,
            "text": " ".join(tokens),
            "creators": ["c7", rng.choice(creators[:6])],
            "categories": ["cat_optics", "cat_polymer"],
            "outcome": round(rng.uniform(0, 10), 3),
            "split": "project",
        })
    # a later c7 project so the team has a task
    serial += 1
    docs.append({
        "doc_id": f"d{serial:04d}",
        "year": 2012,
        "text": "The LASER-lens, (focus) on polymer FILM; a coating & photon beam!",
        "creators": ["c7", "c1", "c2"],
        "categories": ["cat_optics"],
        "outcome": 4.5,
        "split": "project",
    })

    with open(out_path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d, sort_keys=True) + "\n")
        f.write("{not valid json\n")
        f.write(json.dumps({"doc_id": "d9998", "year": 1990, "text": "lens laser photon", "creators": ["c1"],
                            "categories": [], "split": "project"}) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "toy_corpus.jsonl")
