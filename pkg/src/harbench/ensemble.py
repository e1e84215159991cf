"""Majority-vote ensemble of kNN, naive Bayes and Hoeffding tree with a
confidence-gated semi-supervised self-update.

Each member votes its argmax class; the ensemble label is the majority vote
(ties broken by the highest summed posterior). Confidence is the mean
posterior of the members voting for the winner, scaled by the fraction of
members that voted for it, so it reaches 1.0 only under unanimous, fully
confident agreement. During online semi-supervised runs an instance is
trained back into all members iff its confidence is strictly above the gate
threshold (default 0.99).
"""

from __future__ import annotations

import copy
import csv
import hashlib
import pickle
from dataclasses import dataclass, field

import numpy as np

from .features import N_FEATURES
from .learners import (GaussianNbClassifier, HoeffdingTreeClassifier,
                       KnnClassifier, LearnerError, _check_distribution)

MODES = ("supervised_frozen", "semi_supervised")
CONFIDENCE_BUCKETS = 20


class EnsembleError(Exception):
    pass


@dataclass(frozen=True)
class Prediction:
    label: int
    confidence: float
    member_distributions: tuple  # one probability vector per member, for audit


@dataclass
class LearnerParams:
    """Hyperparameters for the three members, all overridable from the CLI."""
    k: int = 5
    knn_capacity: int = 5000
    vfdt_delta: float = 1e-7
    vfdt_tie_threshold: float = 0.05
    vfdt_grace_period: int = 200
    vfdt_max_depth: int | None = None
    confidence_threshold: float = 0.99


@dataclass
class AuditRecord:
    index: int
    true_label: int
    predicted_label: int
    confidence: float
    updated: bool


class Ensemble:
    """Three-member ensemble with confidence-gated self-training."""

    def __init__(self, classes, n_features=N_FEATURES, params=None,
                 update_all_members=True):
        params = params or LearnerParams()
        self.classes = tuple(classes)
        self.params = params
        self.confidence_threshold = params.confidence_threshold
        # True: self-training updates every member (default); False:
        # tri-training style, a member only learns when the other two agree.
        self.update_all_members = update_all_members
        self.members = [
            KnnClassifier(classes, n_features, k=params.k,
                          capacity=params.knn_capacity),
            GaussianNbClassifier(classes, n_features),
            HoeffdingTreeClassifier(classes, n_features,
                                    delta=params.vfdt_delta,
                                    tie_threshold=params.vfdt_tie_threshold,
                                    grace_period=params.vfdt_grace_period,
                                    max_depth=params.vfdt_max_depth),
        ]
        self.instances_seen = 0
        self.self_updates = 0
        self.confidence_histogram = [0] * CONFIDENCE_BUCKETS
        self._trained = False

    def clone(self):
        return copy.deepcopy(self)

    def state_hash(self):
        """Digest of all mutable model state, for gate-soundness audits."""
        payload = pickle.dumps(
            [(m.__class__.__name__, m.__dict__) for m in self.members])
        return hashlib.sha256(payload).hexdigest()

    def train_instance(self, fv):
        for member in self.members:
            member.train(fv.values, fv.label)
        self._trained = True

    def train_offline(self, instances):
        """Fit all members on labeled instances, in stream order."""
        instances = list(instances)
        if not instances:
            raise EnsembleError("empty training set")
        for fv in instances:
            self.train_instance(fv)
        return self

    def classify(self, fv) -> Prediction:
        if not self._trained:
            raise EnsembleError("classify on untrained ensemble")
        dists = [_check_distribution(m.predict(fv.values)) for m in self.members]
        votes = [int(np.argmax(d)) for d in dists]  # argmax = fixed class order
        counts = np.bincount(votes, minlength=len(self.classes))
        top = counts.max()
        tied = np.nonzero(counts == top)[0]
        if len(tied) > 1:
            summed = sum(dists)
            winner = int(tied[np.argmax(summed[tied])])
        else:
            winner = int(tied[0])
        voting = [d[winner] for d, v in zip(dists, votes) if v == winner]
        confidence = float(np.mean(voting) * len(voting) / len(self.members))
        return Prediction(label=self.classes[winner], confidence=confidence,
                          member_distributions=tuple(dists))

    def self_update(self, fv, prediction) -> bool:
        """Train the predicted label back in iff confidence beats the gate."""
        self.instances_seen += 1
        bucket = min(CONFIDENCE_BUCKETS - 1,
                     int(prediction.confidence * CONFIDENCE_BUCKETS))
        self.confidence_histogram[bucket] += 1
        if prediction.confidence <= self.confidence_threshold:
            return False
        if self.update_all_members:
            for member in self.members:
                member.train(fv.values, prediction.label)
        else:
            argmaxes = [self.classes[int(np.argmax(d))]
                        for d in prediction.member_distributions]
            for i, member in enumerate(self.members):
                others = [argmaxes[j] for j in range(3) if j != i]
                if others[0] == others[1]:
                    member.train(fv.values, others[0])
        self.self_updates += 1
        return True

    def run_online(self, instances, mode):
        """Classify a stream; in semi_supervised mode also self-update.

        True labels on the instances are never shown to the model; they are
        carried into the audit records for scoring only.
        """
        if mode not in MODES:
            raise EnsembleError(f"unknown mode {mode!r}, expected one of {MODES}")
        predictions = []
        audit = []
        for i, fv in enumerate(instances):
            pred = self.classify(fv)
            updated = False
            if mode == "semi_supervised":
                updated = self.self_update(fv, pred)
            predictions.append(pred)
            audit.append(AuditRecord(index=i, true_label=fv.label,
                                     predicted_label=pred.label,
                                     confidence=pred.confidence,
                                     updated=updated))
        return predictions, audit


def write_audit_csv(audit, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "true_label", "predicted_label",
                         "confidence", "updated"])
        for rec in audit:
            writer.writerow([rec.index, rec.true_label, rec.predicted_label,
                             repr(rec.confidence), int(rec.updated)])
