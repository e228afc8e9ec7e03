#!/usr/bin/env python3
"""Regenerates the domain fixtures under data/.

Two disjoint slot-filling domains with deliberately unrelated surface names,
plus alias files recording the intended correspondence. Value multiplicities
are chosen so that corresponding informable slots have nearly equal value
entropy while the two unmatched slots of domain B sit well apart from every
entropy in domain A. Deterministic: rerunning reproduces the same bytes.
"""

import json
import random
import sys
from pathlib import Path

REST_ACTS = [
    ("greet", "hello"),
    ("tell", "inform"),
    ("seek", "request"),
    ("verify", "confirm"),
    ("agree", "affirm"),
    ("reject", "deny"),
    ("suggest", "offer"),
    ("finish", "bye"),
]

HOTEL_ACTS = [
    ("probe", "request"),
    ("done", "bye"),
    ("say", "inform"),
    ("check", "confirm"),
    ("yes", "affirm"),
    ("open", "hello"),
    ("no", "deny"),
    ("propose", "offer"),
]

# slot -> list of (value, multiplicity); multiplicities sum to the entity count
REST_INFORMABLE = {
    "food_kind": [("java", 5), ("thai", 5), ("iber", 5), ("nordic", 5), ("fusion", 4)],
    "cost_band": [("low", 14), ("mid", 7), ("high", 3)],
    "zone": [("north", 18), ("south", 3), ("east", 2), ("west", 1)],
    "rating_tier": [("one", 22), ("two", 1), ("three", 1)],
}
REST_REQUESTABLE = ["contact_line", "street_ref", "web_link", "post_tag", "open_hours"]
REST_COUNT = 24

HOTEL_INFORMABLE = {
    "stay_style": [("loft", 6), ("cabin", 6), ("suite", 6), ("villa", 5), ("hostel", 5)],
    "pet_rule": [("allowed", 19), ("banned", 9)],
    "price_rank": [("budget", 16), ("plain", 8), ("grand", 4)],
    "parking_kind": [("street", 20), ("garage", 5), ("valet", 3)],
    "district": [("harbor", 21), ("old_town", 4), ("midline", 2), ("ridge", 1)],
    "star_class": [("entry", 26), ("select", 1), ("premier", 1)],
}
HOTEL_REQUESTABLE = ["phone_ref", "area_text", "site_link", "mail_code", "desk_hours"]
HOTEL_COUNT = 28

ALIAS_B2A = {
    "acts": {
        "probe": "seek",
        "done": "finish",
        "say": "tell",
        "check": "verify",
        "yes": "agree",
        "open": "greet",
        "no": "reject",
        "propose": "suggest",
    },
    "slots": {
        "stay_style": "food_kind",
        "pet_rule": None,
        "price_rank": "cost_band",
        "parking_kind": None,
        "district": "zone",
        "star_class": "rating_tier",
        "phone_ref": "contact_line",
        "area_text": "street_ref",
        "site_link": "web_link",
        "mail_code": "post_tag",
        "desk_hours": "open_hours",
    },
}


def assign_column(spec, count, rng):
    pool = [value for value, mult in spec for _ in range(mult)]
    if len(pool) != count:
        raise ValueError("multiplicities do not sum to the entity count")
    rng.shuffle(pool)
    return pool


def build_domain(name, acts, informable, requestable, count, prefix, req_values, rng):
    columns = {slot: assign_column(spec, count, rng) for slot, spec in informable.items()}
    entities = []
    for i in range(count):
        ent = {"name": f"{prefix}{i + 1:02d}"}
        for slot in informable:
            ent[slot] = columns[slot][i]
        for slot in requestable:
            ent[slot] = req_values[slot](i + 1)
        entities.append(ent)
    return {
        "name": name,
        "speech_acts": [a for a, _ in acts],
        "act_roles": {a: role for a, role in acts},
        "informable_slots": {slot: [v for v, _ in spec] for slot, spec in informable.items()},
        "requestable_slots": requestable,
        "entities": entities,
    }


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(7)

    rest = build_domain(
        "rest_a", REST_ACTS, REST_INFORMABLE, REST_REQUESTABLE, REST_COUNT, "r",
        {
            "contact_line": lambda i: f"555-0{100 + i}",
            "street_ref": lambda i: f"{i} mill lane",
            "web_link": lambda i: f"rest{i}.example",
            "post_tag": lambda i: f"cb{i}",
            "open_hours": lambda i: ["8-22", "10-23", "12-24"][i % 3],
        },
        rng,
    )
    hotel = build_domain(
        "hotel_b", HOTEL_ACTS, HOTEL_INFORMABLE, HOTEL_REQUESTABLE, HOTEL_COUNT, "h",
        {
            "phone_ref": lambda i: f"777-0{200 + i}",
            "area_text": lambda i: f"{i} quay walk",
            "site_link": lambda i: f"stay{i}.example",
            "mail_code": lambda i: f"hb{i}",
            "desk_hours": lambda i: ["24h", "7-23", "6-22"][i % 3],
        },
        rng,
    )

    identity = {
        "acts": {a: a for a, _ in REST_ACTS},
        "slots": {s: s for s in list(REST_INFORMABLE) + REST_REQUESTABLE},
    }

    for fname, payload in [
        ("rest_a.json", rest),
        ("hotel_b.json", hotel),
        ("alias_b2a.json", ALIAS_B2A),
        ("alias_identity_a.json", identity),
    ]:
        (out / fname).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote 4 fixture files to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
