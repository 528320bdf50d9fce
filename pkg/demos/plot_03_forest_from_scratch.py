"""
A random forest on a toy problem
================================

The forest in ``appcontest.model`` is plain CART plus bagging. Here it learns
a noisy diagonal boundary; a single tree overfits the noise.
"""

import numpy as np

from appcontest.model import ForestParams, fit_forest, fit_tree, predict

rng = np.random.default_rng(0)
X = rng.uniform(-1, 1, size=(300, 2))
y = ((X[:, 0] + X[:, 1] + rng.normal(scale=0.3, size=300)) > 0).astype(int)
X_train, y_train, X_test, y_test = X[:150], y[:150], X[150:], y[150:]

tree = fit_tree(X_train, y_train)
print("single tree depth:", tree.depth(), "accuracy:", (tree.predict(X_test) == y_test).mean())

forest = fit_forest(X_train, y_train, ForestParams(n_trees=100, seed=1))
print("forest accuracy:", (predict(forest, X_test) == y_test).mean())

# the whole forest serializes to JSON and comes back identical
text = forest.to_json()
print("forest.json is", len(text) // 1024, "KiB")

# a crude picture of the decision surface
grid = np.linspace(-1, 1, 21)
for gy in grid[::-2]:
    print("".join("A" if predict(forest, [[gx, gy]])[0] else "." for gx in grid))
