"""
Reading the crowd
=================

Sentiment scores, sentiment distributions and comparative statements,
computed on a handful of hand-written posts.
"""

from importlib.resources import files

from appcontest.textmine import (
    ComparativeDictionary,
    SentimentLexicon,
    cosine_similarity,
    detect_comparisons,
    score_sentiment,
    sentiment_distribution,
)

data = files("appcontest") / "data"
lexicon = SentimentLexicon.from_jsonl(data / "lexicon.jsonl")
dictionary = ComparativeDictionary.from_jsonl(data / "comparatives.jsonl")

reviews_A = ["great app, love it", "ok", "broken bike again, awful"]
reviews_B = ["reliable every morning", "cheap and easy", "too expensive and slow"]

# each review gets a score in (0, 1); 0.5 means no lexicon term matched
for text in reviews_A + reviews_B:
    print(f"{score_sentiment(text, lexicon):.3f}  {text}")

dist_A = sentiment_distribution([score_sentiment(t, lexicon) for t in reviews_A])
dist_B = sentiment_distribution([score_sentiment(t, lexicon) for t in reviews_B])
print("A:", dist_A)
print("B:", dist_B)
print("similarity:", round(cosine_similarity(dist_A, dist_B), 4))

# a positive comparative credits the app named before it, a negative one its rival
posts = ["RedBike is lighter than BlueBike",
         "BlueBike is pricier than RedBike",
         "honestly BlueBike feels sturdier"]
for post in posts:
    print(detect_comparisons(post, dictionary, ["RedBike"], ["BlueBike"]), "<-", post)
