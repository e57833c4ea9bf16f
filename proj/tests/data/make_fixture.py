"""Writes hetrec_fixture.dat: 50 users x 80 items in user_taggedartists layout."""
import random

rng = random.Random(20110101)
users = sorted(rng.sample(range(2, 400), 50))
items = sorted(rng.sample(range(50, 9000), 80))
rows = set()
for u in users:
    for it in rng.sample(items, rng.randint(4, 20)):
        for tag in rng.sample(range(1, 60), rng.randint(1, 3)):
            rows.add((u, it, tag))
for it in items:
    if not any(r[1] == it for r in rows):
        rows.add((rng.choice(users), it, rng.randint(1, 59)))
rows = sorted(rows)
# A few exact duplicates exercise the dedup pass.
rows += rows[:5]
with open("hetrec_fixture.dat", "w") as f:
    f.write("userID\tartistID\ttagID\ttimestamp\n")
    for i, (u, it, tag) in enumerate(rows):
        f.write(f"{u}\t{it}\t{tag}\t{1200000000000 + 1000 * i}\n")
