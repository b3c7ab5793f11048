#!/usr/bin/env python3
"""Generate the committed rating-dump fixture (100 users x 20 ratings)."""

import argparse
import csv
import random

TITLES = [
    "Toy Story (1995)", "Jumanji (1995)", "Heat (1995)", "Sabrina (1995)", "GoldenEye (1995)",
    "Casino (1995)", "Babe (1995)", "Se7en (1995)", "Usual Suspects, The (1995)", "Braveheart (1995)",
    "Apollo 13 (1995)", "Clueless (1995)", "Twelve Monkeys (1995)", "Taxi Driver (1976)",
    "Pulp Fiction (1994)", "Forrest Gump (1994)", "Lion King, The (1994)", "Speed (1994)",
    "Shawshank Redemption, The (1994)", "Jurassic Park (1993)", "Schindler's List (1993)",
    "Fargo (1996)", "Independence Day (1996)", "Trainspotting (1996)", "Scream (1996)",
    "Titanic (1997)", "Contact (1997)", "Gattaca (1997)", "Good Will Hunting (1997)",
    "Big Lebowski, The (1998)", "Rushmore (1998)", "Matrix, The (1999)", "Fight Club (1999)",
    "American Beauty (1999)", "Sixth Sense, The (1999)", "Gladiator (2000)", "Memento (2000)",
    "Amelie (2001)", "Shrek (2001)", "Spirited Away (2001)", "Casablanca (1942)",
    "Psycho (1960)", "Vertigo (1958)", "Chinatown (1974)", "Jaws (1975)", "Rocky (1976)",
    "Star Wars: Episode IV - A New Hope (1977)", "Alien (1979)", "Dr. Strangelove (1964)",
    'Crocodile "Dundee" (1986)',
]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures/ratings_100x20.csv")
    ap.add_argument("--users", type=int, default=100)
    ap.add_argument("--per-user", type=int, default=20)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    item_ids = {t: 1000 + i for i, t in enumerate(TITLES)}
    rows = []
    for u in range(1, args.users + 1):
        uid = f"u{u:03d}"
        # Every fourth user carries recorded demographics; a few have only one field.
        age = gender = ""
        if u % 4 == 0:
            age = str(rng.randint(18, 70))
            gender = rng.choice(["M", "F"])
        elif u % 17 == 0:
            age = str(rng.randint(18, 70))
        taste = rng.uniform(-1.0, 1.5)
        t0 = 978300000 + rng.randint(0, 10_000_000)
        for k, title in enumerate(rng.sample(TITLES, args.per_user)):
            rating = min(5.0, max(0.5, round((rng.gauss(3.2 + taste * 0.6, 1.1)) * 2) / 2))
            ts = "" if (u % 13 == 0 and k % 5 == 0) else str(t0 + rng.randint(0, 5_000_000))
            rows.append([uid, item_ids[title], title, f"{rating:.1f}", ts, age, gender])

    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["userId", "itemId", "title", "rating", "timestamp", "age", "gender"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
