"""Synthetic cycling-discussion corpus with planted structure.

Two regions, three units per region and two or three cities per unit.
Posts come from four themes: theft posts lean negative, recreation posts
lean positive, and lane and commute posts sit in between. Each city
shifts the odds of an upbeat or a gloomy closing sentence, which plants
between-city variance. Comments lean more negative than their posts.
One malformed post line and one orphan comment exercise the reject and
orphan paths.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

GEO = {
    "US": {
        "Oregon": ["Portland", "Eugene"],
        "Texas": ["Austin", "Houston", "Dallas"],
        "Washington": ["Seattle", "Spokane"],
    },
    "EU": {
        "Denmark": ["Copenhagen", "Aarhus"],
        "Germany": ["Berlin", "Munich", "Hamburg"],
        "Netherlands": ["Amsterdam", "Utrecht"],
    },
}

# city -> probability that a post closes on an upbeat sentence
CITY_MOOD = {
    "Portland": 0.95, "Eugene": 0.3, "Austin": 0.7, "Houston": 0.05, "Dallas": 0.4,
    "Seattle": 0.85, "Spokane": 0.2, "Copenhagen": 0.95, "Aarhus": 0.5, "Berlin": 0.25,
    "Munich": 0.75, "Hamburg": 0.05, "Amsterdam": 0.9, "Utrecht": 0.35,
}

THEMES = {
    "theft": {
        "subject": ["my bike was stolen", "someone stole my bicycle", "another bike theft",
                    "thieves cut the lock on my bike", "stolen bike report"],
        "detail": ["the lock was cut at the rack", "police said they cannot help with the theft",
                   "the thief took the wheel and seat", "check the stolen registry for my frame",
                   "u lock was useless against an angle grinder", "theft at the station rack again"],
        "tone": ["I am furious and sad", "this is awful and frustrating", "terrible city for theft",
                 "feeling robbed and angry", "worst week ever"],
        "tags": ["stolen", "theft", "lock", "thief", "police", "rack"],
        "weight": 0.25,
    },
    "recreation": {
        "subject": ["weekend group ride", "gravel trail ride", "sunset ride along the river trail",
                    "scenic loop through the hills", "fun family ride on the greenway"],
        "detail": ["join us for the social ride on saturday", "the gravel trails are in great shape",
                   "the river trail views are beautiful", "mtb trails opened new singletrack",
                   "coffee stop halfway through the ride", "the club welcomes new riders"],
        "tone": ["what a wonderful day", "love riding here", "so much fun with friends",
                 "amazing views and great people", "best ride of the year"],
        "tags": ["ride", "trail", "gravel", "group", "scenic", "weekend"],
        "weight": 0.25,
    },
    "lanes": {
        "subject": ["new protected bike lane downtown", "painted lane on main street",
                    "city plans bike lane redesign", "bollards added to the bike lane"],
        "detail": ["the lane has concrete barriers now", "cars park in the painted lane",
                   "the intersection signal timing changed", "council voted on the lane design"],
        "tone": ["mixed feelings about it", "curious what others think", "it is a start",
                 "hope it works out"],
        "tags": ["lane", "protected", "painted", "barriers", "bollards", "design"],
        "weight": 0.25,
    },
    "commute": {
        "subject": ["commute route advice", "safest route to work by bike", "winter bike commute",
                    "route planning for my commute"],
        "detail": ["looking for the safest route across the bridge", "my commute is about ten kilometers",
                   "should I take the quiet streets or the arterial", "shower at work after the commute"],
        "tone": ["thanks for any tips", "appreciate the help", "any suggestions welcome",
                 "happy to share my route"],
        "tags": ["commute", "route", "work", "safest", "bridge", "traffic"],
        "weight": 0.25,
    },
}

UPBEAT = ["Overall it is great here, love it.", "Really happy with cycling in this wonderful city.",
          "Love it, best city for bikes."]
GLOOMY = ["Honestly the city is failing cyclists, awful.", "Drivers here are dangerous, rude and hostile.",
          "Sad state of things, terrible and depressing."]

COMMENT_TEXTS = [
    "This is the problem with this city, nothing gets fixed.",
    "Drivers never respect the lane, it is dangerous.",
    "Sorry that happened, awful.",
    "Same thing happened to me, terrible.",
    "The council is useless on this.",
    "I disagree, it is not safe at all.",
    "Thanks for sharing.",
    "Nice, see you there.",
    "Where exactly is this?",
    "Good to know.",
]
COMMENT_WEIGHTS = np.array([3, 3, 2, 2, 2, 2, 1, 1, 1, 1], dtype=float)


def _subreddit(city: str) -> str:
    return f"{city.lower()}bikes"


def geo_map() -> dict:
    out = {}
    for region, units in GEO.items():
        for unit, cities in units.items():
            for city in cities:
                out[_subreddit(city)] = {"region": region, "unit": unit, "city": city}
    return out


def generate(n_posts: int = 200, seed: int = 0) -> tuple[list[dict], list[dict], dict]:
    """Return ``(posts, comments, geo_map)`` as plain JSON-ready dicts."""
    rng = np.random.default_rng(seed)
    slots = [(region, unit, city) for region, units in GEO.items()
             for unit, cities in units.items() for city in cities]
    # equal share per region, then per unit, then per city
    assign = []
    per_region = n_posts // 2
    for region in GEO:
        units = list(GEO[region])
        for i in range(per_region):
            unit = units[i % len(units)]
            cities = GEO[region][unit]
            assign.append((region, unit, cities[(i // len(units)) % len(cities)]))
    while len(assign) < n_posts:
        assign.append(slots[len(assign) % len(slots)])

    theme_names = list(THEMES)
    weights = np.array([THEMES[t]["weight"] for t in theme_names])
    posts, comments = [], []
    t0 = 1_600_000_000
    cid = 0
    for i, (region, unit, city) in enumerate(assign):
        theme = THEMES[theme_names[rng.choice(len(theme_names), p=weights / weights.sum())]]
        parts = [
            "Bike " + str(rng.choice(theme["subject"])),
            *(str(d) + "." for d in rng.choice(theme["detail"], 2, replace=False)),
            str(rng.choice(theme["tone"])) + ".",
            "Tags: " + " ".join(str(t) for t in rng.choice(theme["tags"], 4, replace=False)) + ".",
        ]
        closing = rng.choice(UPBEAT) if rng.random() < CITY_MOOD[city] else rng.choice(GLOOMY)
        title, body = parts[0], " ".join(parts[1:] + [str(closing)])
        pid = f"p{i:04d}"
        n_comments = int(rng.integers(0, 5))
        posts.append({
            "id": pid, "subreddit": _subreddit(city), "title": title,
            "selftext": body, "author": f"user{int(rng.integers(0, 60))}",
            "created_utc": t0 + 3600 * i, "num_comments": n_comments,
            "score": int(rng.integers(0, 200)), "upvote_ratio": round(float(rng.uniform(0.6, 1.0)), 2),
            "permalink": f"/r/{_subreddit(city)}/comments/{pid}/",
        })
        for j in range(n_comments):
            text = COMMENT_TEXTS[rng.choice(len(COMMENT_TEXTS), p=COMMENT_WEIGHTS / COMMENT_WEIGHTS.sum())]
            comments.append({
                "comment_id": f"c{cid:05d}", "parent_id": f"t3_{pid}", "body": text,
                "author": f"user{int(rng.integers(0, 60))}",
                "created_utc": t0 + 3600 * i + 60 * (n_comments - j), "score": int(rng.integers(-5, 50)),
            })
            cid += 1
    comments.append({"comment_id": f"c{cid:05d}", "parent_id": "t3_missing", "body": "orphaned reply",
                     "author": "user0", "created_utc": t0, "score": 1})
    return posts, comments, geo_map()


def write_fixture(outdir, n_posts: int = 200, seed: int = 0) -> dict[str, Path]:
    """Write ``posts.jsonl``, ``comments.jsonl`` and ``geo_map.json`` into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    posts, comments, geo = generate(n_posts, seed)
    paths = {"posts": outdir / "posts.jsonl", "comments": outdir / "comments.jsonl",
             "geo_map": outdir / "geo_map.json"}
    with paths["posts"].open("w", encoding="utf-8", newline="\n") as fh:
        for k, p in enumerate(posts):
            fh.write(json.dumps(p, sort_keys=True) + "\n")
            if k == 2:
                fh.write('{"id": "broken", "subreddit": \n')
    with paths["comments"].open("w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(json.dumps(c, sort_keys=True) + "\n")
    paths["geo_map"].write_text(json.dumps(geo, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
