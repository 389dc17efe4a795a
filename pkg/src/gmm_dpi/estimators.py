"""scikit-learn estimators for the processing operator and the plug-in classifier.

Both follow the usual contract (hyper-parameters in ``__init__``, learned state
in trailing-underscore attributes, ``fit`` returns ``self``) so they can sit in
a ``Pipeline``::

    make_pipeline(MeanPreservingProjection(n_components=1000), NearestMeanClassifier())
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y, \
    check_random_state

from .processing import construct_processing, learn_direction
from .simulation import MeanEstimates, decision_statistic


class MeanPreservingProjection(TransformerMixin, BaseEstimator):
    """Orthonormal-row projection to ``n_components`` dimensions that keeps the mean direction.

    Parameters
    ----------
    n_components : int
        Output dimension ``k``; must not exceed the input dimension.
    direction : array-like of shape (n_features,), default=None
        Known mean direction.  When omitted, ``fit`` estimates it as the top
        eigenvector of the second moment of ``X`` (labels are ignored).
    max_iter, tol : power-iteration controls.
    random_state : int, Generator or None
        Seeds the power-iteration start vector.

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
    direction_ : ndarray of shape (n_features,)
    n_iter_ : int
        Power iterations used (0 when ``direction`` was given).
    """

    def __init__(self, n_components=1, direction=None, max_iter=10_000, tol=1e-10,
                 random_state=None):
        self.n_components = n_components
        self.direction = direction
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        d = X.shape[1]
        if not 1 <= self.n_components <= d:
            raise ValueError(f"n_components={self.n_components} must lie in [1, {d}]")
        if self.direction is not None:
            u = np.asarray(self.direction, dtype=float).reshape(-1)
            if u.size != d:
                raise ValueError(f"direction has {u.size} entries, X has {d} features")
            self.n_iter_ = 0
        else:
            rs = check_random_state(self.random_state)
            est = learn_direction(X, max_iters=self.max_iter, tol=self.tol,
                                  rng=np.random.default_rng(rs.randint(2**31)))
            u = est.direction
            self.n_iter_ = est.iterations_used
        A = construct_processing(u, self.n_components)
        self.direction_ = A.rows[0].copy()
        self.processing_ = A
        self.components_ = np.array(A.rows)
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.components_.T


class NearestMeanClassifier(ClassifierMixin, BaseEstimator):
    """Two-class nearest-estimated-mean rule.

    ``classes_[0]`` plays the role of class 1 (ties go to it) and
    ``classes_[1]`` of class 2.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise ValueError(f"need exactly two classes, got {len(self.classes_)}")
        self.means_ = np.vstack([X[y == c].mean(axis=0) for c in self.classes_])
        self.n_features_in_ = X.shape[1]
        return self

    def _estimates(self):
        check_is_fitted(self, "means_")
        return MeanEstimates(self.means_[0], self.means_[1])

    def decision_function(self, X):
        X = check_array(X)
        return decision_statistic(X, self._estimates())

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]

    @property
    def mean_estimates_(self) -> MeanEstimates:
        return self._estimates()
