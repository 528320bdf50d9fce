"""
Generating a synthetic contest
==============================

Two bike-sharing apps compete for downloads. We simulate a few months of
reviews, microblog posts and weekly downloads, then look at who won each week.
"""

import numpy as np

from appcontest import Scenario, generate
from appcontest.ingest import bucket, parse_downloads, parse_microblogs, parse_reviews
from appcontest.features import compute_labels

scenario = Scenario(weeks=20, seed=42, drift_A=0.05, volatility=0.4)
out = generate(scenario)

# the generator hands back JSONL text, the same format the pipeline reads
print(out.reviews.splitlines()[0])
print(out.microblogs.splitlines()[0])

windowed = bucket(parse_reviews(out.reviews), parse_microblogs(out.microblogs),
                  parse_downloads(out.downloads), scenario.window_spec())
labels = compute_labels(windowed)

# pc is the popularity contest, in [-1, 1]; positive means A got more downloads
for w in range(len(labels)):
    bar = "#" * int(round(20 * labels.ci[w]))
    side = "A" if labels.cr[w] else "B"
    print(f"week {w:2d}  pc={labels.pc[w]:+.3f}  {side} {bar}")

print("weeks won by A:", int(labels.cr.sum()), "of", len(labels))
print("mean intensity:", np.round(labels.ci.mean(), 3))
