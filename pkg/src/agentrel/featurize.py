"""Rule-based step featurizer.

Each step maps to ``one-hot(tool_type) + [retry] + one-hot(error_code)``.
Vocabularies are frozen on the corpus the space is built from; categories
unseen at build time map to an all-zero block.

Any other featurizer only has to produce a :class:`FeaturizedCorpus`
(aligned, fixed-dimension vectors per trace) to plug into clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCorpus


@dataclass(frozen=True)
class FeatureSpace:
    tool_vocab: tuple
    error_vocab: tuple

    @property
    def dimension(self):
        return len(self.tool_vocab) + 1 + len(self.error_vocab)

    def vector(self, step):
        v = np.zeros(self.dimension)
        tools = {t: i for i, t in enumerate(self.tool_vocab)}
        if step.tool_type in tools:
            v[tools[step.tool_type]] = 1.0
        v[len(self.tool_vocab)] = 1.0 if step.retry else 0.0
        if step.error_code is not None and step.error_code in self.error_vocab:
            v[len(self.tool_vocab) + 1 + self.error_vocab.index(step.error_code)] = 1.0
        return v

    def to_dict(self):
        return {"kind": "rule_based", "encoding": "indicator", "tool_vocab": list(self.tool_vocab),
                "error_vocab": list(self.error_vocab)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["tool_vocab"]), tuple(d["error_vocab"]))


@dataclass(frozen=True)
class FeaturizedCorpus:
    space: FeatureSpace
    vectors: tuple  # one (L_i, p) array per trace

    @property
    def stacked(self):
        if not self.vectors:
            return np.zeros((0, self.space.dimension))
        return np.vstack(self.vectors)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum([len(v) for v in self.vectors])]).astype(np.int64)

    @property
    def n_points(self):
        return int(sum(len(v) for v in self.vectors))


def build_feature_space(corpus):
    if len(corpus) == 0:
        raise EmptyCorpus("cannot build a feature space from an empty corpus")
    tools, errors = set(), set()
    for t in corpus:
        for s in t.steps:
            tools.add(s.tool_type)
            if s.error_code is not None:
                errors.add(s.error_code)
    return FeatureSpace(tuple(sorted(tools)), tuple(sorted(errors)))


def featurize_corpus(corpus, space):
    tool_index = {t: i for i, t in enumerate(space.tool_vocab)}
    err_index = {e: i for i, e in enumerate(space.error_vocab)}
    nt = len(space.tool_vocab)
    out = []
    for t in corpus:
        X = np.zeros((t.length, space.dimension))
        for r, s in enumerate(t.steps):
            j = tool_index.get(s.tool_type)
            if j is not None:
                X[r, j] = 1.0
            if s.retry:
                X[r, nt] = 1.0
            e = err_index.get(s.error_code) if s.error_code is not None else None
            if e is not None:
                X[r, nt + 1 + e] = 1.0
        out.append(X)
    return FeaturizedCorpus(space, tuple(out))
