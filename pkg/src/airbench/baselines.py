"""Reference predictors: truth echo, constant channel means, k-NN field transfer.

These anchor the leaderboard: the oracle bounds scores from above, the
constant predictor from below, and the nearest-neighbor surrogate sits in
between and exercises the whole pipeline like a real model would. All three
are registered as builtin predictor names (``oracle``, ``constant``,
``knn:<k>``) and can also run as an external executable (``airbench-predict``)
to self-test the file protocol.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError
from .io import read_dataset, write_predictions
from .model import Dataset, FieldSet, Prediction, Sample

_FEATURES = 5  # x, y, distance-to-surface, inlet ux, inlet uy


def oracle_predict(sample: Sample) -> FieldSet:
    """Echo the ground-truth fields."""
    return sample.truth_fields


def fit_channel_means(train: Dataset) -> dict[str, float]:
    """Per-channel means pooled over every node of the training split."""
    if not train.samples:
        raise ParameterError("cannot fit on an empty training split")
    out = {}
    for ch in FieldSet.CHANNELS:
        pooled = np.concatenate([s.truth_fields.channel(ch) for s in train.samples])
        out[ch] = float(np.mean(pooled))
    return out


def constant_predict(train_stats: dict[str, float], sample: Sample) -> FieldSet:
    """Every node receives the training-split channel mean."""
    n = sample.n_nodes
    return FieldSet(
        u_x=np.full(n, train_stats["u_x"]),
        u_y=np.full(n, train_stats["u_y"]),
        p_s=np.full(n, train_stats["p_s"]),
        nu_t=np.full(n, train_stats["nu_t"]),
    )


def _node_features(sample: Sample) -> np.ndarray:
    feats = np.empty((sample.n_nodes, _FEATURES))
    feats[:, 0:2] = sample.positions
    feats[:, 2] = sample.distance
    feats[:, 3] = sample.inlet_velocity[0]
    feats[:, 4] = sample.inlet_velocity[1]
    return feats


@dataclass
class KnnModel:
    """Training nodes pooled across samples, in normalized feature space."""

    k: int
    scale: np.ndarray        # (5,) per-feature normalization constants
    features: np.ndarray     # (M, 5) scaled training features
    outputs: np.ndarray      # (M, 4) training outputs u_x, u_y, p_s, nu_t
    tree: cKDTree
    weights: str = "idw"     # "idw" or "uniform"


def knn_fit(train: Dataset, k: int, weights: str = "idw") -> KnnModel:
    """Pool all training nodes and index them for neighbor queries.

    Features are normalized by their per-feature standard deviation over the
    training pool so positions and velocities contribute on equal footing.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if weights not in ("idw", "uniform"):
        raise ParameterError(f"unknown weight mode {weights!r}")
    if not train.samples:
        raise ParameterError("cannot fit on an empty training split")
    feats = np.vstack([_node_features(s) for s in train.samples])
    outs = np.vstack(
        [
            np.column_stack(
                [s.truth_fields.u_x, s.truth_fields.u_y, s.truth_fields.p_s, s.truth_fields.nu_t]
            )
            for s in train.samples
        ]
    )
    scale = feats.std(axis=0)
    scale[scale == 0.0] = 1.0
    scaled = feats / scale
    return KnnModel(
        k=min(k, len(scaled)),
        scale=scale,
        features=scaled,
        outputs=outs,
        tree=cKDTree(scaled),
        weights=weights,
    )


def knn_predict(model: KnnModel, sample: Sample) -> FieldSet:
    """Inverse-distance-weighted mean of the k nearest training nodes.

    Neighbors are ordered by (distance, training index) so summation order is
    fixed; a query that lands exactly on a training node takes that node's
    outputs verbatim (lowest training index on ties).
    """
    q = _node_features(sample) / model.scale
    dist, idx = model.tree.query(q, k=model.k)
    if model.k == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    # Deterministic tie ordering within each neighbor set.
    order = np.lexsort((idx, dist), axis=1)
    dist = np.take_along_axis(dist, order, axis=1)
    idx = np.take_along_axis(idx, order, axis=1)

    neigh_out = model.outputs[idx]  # (n, k, 4)
    if model.weights == "uniform":
        pred = neigh_out.mean(axis=1)
    else:
        # Exact matches get infinite weight; those rows are overwritten below.
        with np.errstate(divide="ignore", invalid="ignore"):
            w = 1.0 / dist
            pred = np.einsum("nk,nkc->nc", w, neigh_out) / np.sum(w, axis=1)[:, None]
        exact = dist[:, 0] == 0.0
        if np.any(exact):
            pred[exact] = model.outputs[idx[exact, 0]]
    return FieldSet(u_x=pred[:, 0], u_y=pred[:, 1], p_s=pred[:, 2], nu_t=pred[:, 3])


class OraclePredictor:
    label = "oracle"

    def fit(self, train: Dataset) -> None:
        pass

    def predict(self, sample: Sample) -> FieldSet:
        return oracle_predict(sample)


class ConstantPredictor:
    label = "constant"

    def __init__(self):
        self._stats = None

    def fit(self, train: Dataset) -> None:
        self._stats = fit_channel_means(train)

    def predict(self, sample: Sample) -> FieldSet:
        if self._stats is None:
            raise ParameterError("constant predictor used before fitting")
        return constant_predict(self._stats, sample)


class KnnPredictor:
    def __init__(self, k: int, weights: str = "idw"):
        self.label = f"knn:{k}"
        self.k = k
        self.weights = weights
        self._model = None

    def fit(self, train: Dataset) -> None:
        self._model = knn_fit(train, self.k, self.weights)

    def predict(self, sample: Sample) -> FieldSet:
        if self._model is None:
            raise ParameterError("knn predictor used before fitting")
        return knn_predict(self._model, sample)


def resolve_builtin(name: str):
    """Map a builtin predictor name to a fresh predictor instance."""
    if name == "oracle":
        return OraclePredictor()
    if name == "constant":
        return ConstantPredictor()
    if name.startswith("knn:"):
        try:
            k = int(name.split(":", 1)[1])
        except ValueError:
            raise ParameterError(f"bad knn predictor name {name!r}, expected knn:<k>") from None
        return KnnPredictor(k)
    raise ParameterError(f"unknown builtin predictor {name!r}")


def main(argv: list[str] | None = None) -> int:
    """External-executable entry point: predict a dataset into a directory.

    Usage: airbench-predict <name> <dataset_dir> <pred_dir> [--train DIR]
    Implements the same file protocol external submissions use, which lets
    the harness self-test its process plumbing against the builtins.
    """
    parser = argparse.ArgumentParser(prog="airbench-predict")
    parser.add_argument("name", help="builtin predictor name (oracle, constant, knn:<k>)")
    parser.add_argument("dataset_dir")
    parser.add_argument("pred_dir")
    parser.add_argument("--train", default=None, help="training split directory, if the predictor needs one")
    args = parser.parse_args(argv)

    try:
        predictor = resolve_builtin(args.name)
        if args.train is not None:
            predictor.fit(read_dataset(args.train))
        dataset = read_dataset(args.dataset_dir)
        predictions = [
            Prediction(sample_id=s.id, fields=predictor.predict(s)) for s in dataset.samples
        ]
        write_predictions(predictions, args.pred_dir)
    except Exception as e:  # a predictor executable signals failure by exit code
        print(f"airbench-predict: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
