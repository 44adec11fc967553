"""Writes comoda_sample.csv, a synthetic corpus in the LDOS-CoMoDa column layout.

95 users, 961 items, 1665 ratings. A block of 30 popular items carries most
of the ratings so that pre-filtered corpora still have co-rated items; the
remaining items are rated once each. Ratings follow a per-user genre taste.
"""
import csv
import random
import sys

USERS, ITEMS, RATINGS, POPULAR = 95, 961, 1665, 30
CARD = {"time": 4, "daytype": 3, "season": 4, "location": 3, "weather": 5, "social": 7,
        "endEmo": 7, "dominantEmo": 7, "mood": 3, "physical": 2, "decision": 2, "interaction": 2}
# Skewed context distributions: evenings at home on working days dominate.
BIAS = {"time": [1, 2, 6, 2], "daytype": [5, 3, 1], "location": [6, 2, 2], "social": [3, 4, 2, 1, 1, 1, 2],
        "mood": [5, 3, 2], "physical": [9, 1]}

rng = random.Random(1998)


def context_code(dim):
    if rng.random() < 0.03:
        return -1
    weights = BIAS.get(dim, [1] * CARD[dim])
    return rng.choices(range(1, CARD[dim] + 1), weights=weights)[0]


items = {}
for i in range(1, ITEMS + 1):
    k = rng.choice([1, 1, 2, 2, 3])
    items[i] = {"genres": rng.sample(range(1, 23), k), "year": rng.randint(1950, 2011),
                "budget": rng.choice([-1, rng.randint(1, 200) * 1_000_000])}
taste = {u: {g: rng.gauss(0, 1) for g in range(1, 23)} for u in range(1, USERS + 1)}
users = {u: {"age": rng.randint(16, 60), "sex": rng.choice([1, 2]), "city": rng.randint(1, 30), "country": 1}
         for u in range(1, USERS + 1)}

pairs = []
tail = list(range(POPULAR + 1, ITEMS + 1))
for i in tail:
    pairs.append((rng.randint(1, USERS), i))
seen = set()
while len(pairs) < RATINGS:
    u = rng.randint(1, USERS)
    i = rng.randint(1, POPULAR)
    if (u, i) in seen and rng.random() < 0.9:
        continue
    seen.add((u, i))
    pairs.append((u, i))


def stars(u, i):
    score = 3.2 + sum(taste[u][g] for g in items[i]["genres"]) / len(items[i]["genres"]) + rng.gauss(0, 0.6)
    return min(5, max(1, round(score)))


header = ["userID", "itemID", "rating", "age", "sex", "city", "country", *CARD, "director", "movieCountry",
          "movieLanguage", "movieYear", "genre1", "genre2", "genre3", "actor1", "actor2", "actor3", "budget"]
w = csv.writer(sys.stdout, lineterminator="\n")
w.writerow(header)
for u, i in sorted(pairs):
    it, us = items[i], users[u]
    g = it["genres"] + [-1] * (3 - len(it["genres"]))
    w.writerow([u, i, stars(u, i), us["age"], us["sex"], us["city"], us["country"],
                *(context_code(d) for d in CARD), rng.randint(1, 500), rng.randint(1, 40), rng.randint(1, 20),
                it["year"], *g, rng.randint(1, 3000), rng.randint(1, 3000), rng.randint(1, 3000), it["budget"]])
