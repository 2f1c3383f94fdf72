import numpy as np
import pytest
from hypothesis import given, strategies as st

from edenet.data import (
    ANOMALY,
    NORMAL,
    Dataset,
    Schema,
    SchemaColumn,
    ScalingStats,
    apply_scale,
    fit_scale,
    generate_synthetic,
    load_csv,
    load_schema,
    numeric_schema_for,
    save_schema,
    scaling_from_dict,
    scaling_to_dict,
    schema_from_dict,
    schema_to_dict,
    split_normal_train,
    write_csv,
)
from edenet.errors import CsvParseError, NotFittedError, SchemaError, ShapeError

NUM2 = Schema((SchemaColumn("a", "numeric"), SchemaColumn("b", "numeric")))
MIXED = Schema((
    SchemaColumn("size", "numeric"),
    SchemaColumn("color", "categorical", ("red", "green", "blue")),
))
LABELED = Schema(
    (SchemaColumn("v", "numeric"),),
    label_column="status", normal_value="ok",
)


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---------------------------------------------------------------------------
# schema objects


def test_schema_column_validation():
    with pytest.raises(SchemaError):
        SchemaColumn("x", "text")
    with pytest.raises(SchemaError):
        SchemaColumn("x", "categorical", ())
    with pytest.raises(SchemaError):
        SchemaColumn("x", "categorical", ("a", "a"))
    with pytest.raises(SchemaError):
        SchemaColumn("x", "numeric", ("a",))


def test_schema_validation():
    with pytest.raises(SchemaError):
        Schema(())
    with pytest.raises(SchemaError):
        Schema((SchemaColumn("a", "numeric"), SchemaColumn("a", "numeric")))
    with pytest.raises(SchemaError):
        Schema((SchemaColumn("a", "numeric"),), label_column="a",
               normal_value="0")
    with pytest.raises(SchemaError):
        Schema((SchemaColumn("a", "numeric"),), label_column="y")


def test_feature_width_counts_onehot_slots():
    assert MIXED.feature_width == 4
    assert NUM2.feature_width == 2


def test_label_of_plain_and_inverted():
    assert LABELED.label_of("ok") == NORMAL
    assert LABELED.label_of("bad") == ANOMALY
    flipped = Schema(LABELED.columns, label_column="status",
                     normal_value="ok", invert_labels=True)
    assert flipped.label_of("ok") == ANOMALY
    assert flipped.label_of("bad") == NORMAL


# ---------------------------------------------------------------------------
# csv loading


def test_load_numeric_columns(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n3.5,-4\n0,0\n")
    ds = load_csv(p, NUM2)
    assert np.array_equal(ds.features, [[1, 2], [3.5, -4], [0, 0]])
    assert ds.labels is None
    assert ds.feature_names() == ["a", "b"]


def test_onehot_expansion_in_vocabulary_order(tmp_path):
    p = write(tmp_path, "size,color\n2,green\n1,red\n")
    ds = load_csv(p, MIXED)
    assert ds.feature_names() == ["size", "color=red", "color=green", "color=blue"]
    assert np.array_equal(ds.features, [[2, 0, 1, 0], [1, 1, 0, 0]])


def test_unknown_categorical_value_becomes_zero_block(tmp_path):
    p = write(tmp_path, "size,color\n1,purple\n")
    ds = load_csv(p, MIXED)
    assert np.array_equal(ds.features, [[1, 0, 0, 0]])


def test_column_order_in_file_does_not_matter(tmp_path):
    p = write(tmp_path, "color,size\nblue,7\n")
    ds = load_csv(p, MIXED)
    assert np.array_equal(ds.features, [[7, 0, 0, 1]])


def test_labels_parsed_from_label_column(tmp_path):
    p = write(tmp_path, "v,status\n1,ok\n2,fail\n3,ok\n")
    ds = load_csv(p, LABELED)
    assert np.array_equal(ds.labels, [NORMAL, ANOMALY, NORMAL])
    assert ds.n_features == 1  # label never enters the feature matrix


def test_require_labels_false_drops_them(tmp_path):
    p = write(tmp_path, "v,status\n1,ok\n")
    assert load_csv(p, LABELED, require_labels=False).labels is None


def test_require_labels_errors(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(SchemaError):
        load_csv(p, NUM2, require_labels=True)  # schema has no label column
    p2 = write(tmp_path, "v\n1\n", name="nolabel.csv")
    with pytest.raises(SchemaError):
        load_csv(p2, LABELED, require_labels=True)


def test_headerless_mode_takes_schema_order_label_last(tmp_path):
    p = write(tmp_path, "1,ok\n2,fail\n")
    ds = load_csv(p, LABELED, has_header=False)
    assert np.array_equal(ds.features, [[1], [2]])
    assert np.array_equal(ds.labels, [NORMAL, ANOMALY])


def test_missing_declared_column_rejected(tmp_path):
    p = write(tmp_path, "a\n1\n")
    with pytest.raises(SchemaError, match="missing"):
        load_csv(p, NUM2)


def test_unknown_csv_column_rejected(tmp_path):
    p = write(tmp_path, "a,b,c\n1,2,3\n")
    with pytest.raises(SchemaError, match="not covered"):
        load_csv(p, NUM2)


def test_ragged_row_reports_line_number(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n3\n")
    with pytest.raises(CsvParseError, match="expected 2 fields") as exc:
        load_csv(p, NUM2)
    assert exc.value.line == 3


def test_non_numeric_value_reports_line_and_column(tmp_path):
    p = write(tmp_path, "a,b\n1,oops\n")
    with pytest.raises(CsvParseError, match="'b'") as exc:
        load_csv(p, NUM2)
    assert exc.value.line == 2


def test_empty_file_rejected(tmp_path):
    p = write(tmp_path, "")
    with pytest.raises(CsvParseError):
        load_csv(p, NUM2)


def test_blank_lines_skipped(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n\n3,4\n")
    assert load_csv(p, NUM2).n_rows == 2


def test_write_then_load_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    ds = Dataset(features=rng.standard_normal((20, 3)) * 1e3,
                 labels=rng.integers(0, 2, 20))
    p = tmp_path / "roundtrip.csv"
    write_csv(p, ds)
    back = load_csv(p, numeric_schema_for(ds))
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


# ---------------------------------------------------------------------------
# dataset container


def test_dataset_validation():
    with pytest.raises(ShapeError):
        Dataset(features=np.zeros(3))
    with pytest.raises(ShapeError):
        Dataset(features=np.zeros((2, 2)), labels=np.zeros(3))
    with pytest.raises(ValueError):
        Dataset(features=np.zeros((2, 2)), labels=np.array([0, 7]))


def test_dataset_features_are_read_only():
    ds = Dataset(features=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


# ---------------------------------------------------------------------------
# scaling


def test_fit_scale_maps_to_unit_interval():
    ds = fit_scale(Dataset(features=np.array([[0.0], [5.0], [10.0]])))
    assert np.allclose(ds.features, [[0.0], [0.5], [1.0]], atol=1e-12)
    assert ds.scaling_stats is not None


def test_fit_scale_constant_column_goes_to_zero():
    ds = fit_scale(Dataset(features=np.array([[3.0, 1.0], [3.0, 2.0]])))
    assert np.array_equal(ds.features[:, 0], [0.0, 0.0])


def test_fit_scale_empty_rejected():
    with pytest.raises(ValueError):
        fit_scale(Dataset(features=np.zeros((0, 2))))


def test_apply_scale_requires_fitted_stats():
    ds = Dataset(features=np.zeros((2, 2)))
    with pytest.raises(NotFittedError):
        apply_scale(ds, None)
    with pytest.raises(ShapeError):
        apply_scale(ds, ScalingStats(np.zeros(3), np.ones(3)))


def test_apply_scale_clips_out_of_range_values():
    train = fit_scale(Dataset(features=np.array([[0.0], [10.0]])))
    test = apply_scale(Dataset(features=np.array([[-100.0], [5.0], [100.0]])),
                       train.scaling_stats)
    assert np.allclose(test.features[:, 0], [-0.5, 0.5, 1.5], atol=1e-12)


@given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=5),
                min_size=2, max_size=20).filter(
                    lambda rows: len({len(r) for r in rows}) == 1))
def test_fit_scale_output_always_in_unit_interval(rows):
    ds = fit_scale(Dataset(features=np.array(rows)))
    assert ds.features.min() >= -1e-12
    assert ds.features.max() <= 1 + 1e-12


# ---------------------------------------------------------------------------
# splitting


def tagged_dataset(n=100, anomaly_every=5):
    # column 0 is a unique row id so split accounting is easy to audit
    ids = np.arange(n, dtype=np.float64)
    labels = np.where(ids % anomaly_every == 0, ANOMALY, NORMAL)
    return Dataset(features=np.column_stack([ids, ids * 0.5]), labels=labels)


def test_split_train_is_normal_only_and_unlabeled():
    data = tagged_dataset()
    train, test = split_normal_train(data, 0.8, seed=3)
    assert train.labels is None
    train_ids = set(train.features[:, 0].astype(int))
    anomaly_ids = {i for i in range(100) if i % 5 == 0}
    assert not train_ids & anomaly_ids


def test_split_is_disjoint_and_covers_input():
    data = tagged_dataset()
    train, test = split_normal_train(data, 0.8, seed=3)
    train_ids = set(train.features[:, 0].astype(int))
    test_ids = set(test.features[:, 0].astype(int))
    assert not train_ids & test_ids
    assert train_ids | test_ids == set(range(100))
    assert len(train_ids) + len(test_ids) == 100


def test_split_pushes_sampled_anomalies_to_test():
    data = tagged_dataset()
    train, test = split_normal_train(data, 0.8, seed=3)
    # 80 rows drawn, those that were anomalies went back to the test side
    assert train.n_rows <= 80
    assert test.n_rows == 100 - train.n_rows
    assert int(test.labels.sum()) == 20


def test_split_same_seed_reproduces():
    data = tagged_dataset()
    a_train, _ = split_normal_train(data, 0.6, seed=9)
    b_train, _ = split_normal_train(data, 0.6, seed=9)
    assert np.array_equal(a_train.features, b_train.features)


def test_split_argument_validation():
    data = tagged_dataset()
    with pytest.raises(ValueError):
        split_normal_train(data, 1.5)
    with pytest.raises(ValueError):
        split_normal_train(Dataset(features=np.zeros((4, 1))), 0.5)


# ---------------------------------------------------------------------------
# synthetic data


def test_synthetic_layout_and_labels():
    ds = generate_synthetic(d=3, n_normal=10, n_anomaly=4, anomaly_shift=2.0,
                            seed=1)
    assert ds.features.shape == (14, 3)
    assert np.array_equal(ds.labels, [NORMAL] * 10 + [ANOMALY] * 4)
    assert ds.feature_names() == ["x0", "x1", "x2"]


def test_synthetic_anomalies_are_shifted():
    ds = generate_synthetic(d=4, n_normal=2000, n_anomaly=2000,
                            anomaly_shift=3.0, seed=2)
    tol = 3.0 / np.sqrt(2000)
    assert np.all(np.abs(ds.features[:2000].mean(axis=0)) < tol)
    assert np.all(np.abs(ds.features[2000:].mean(axis=0) - 3.0) < tol)


def test_synthetic_is_seed_deterministic_and_allows_zero_anomalies():
    a = generate_synthetic(2, 5, 0, 1.0, seed=4)
    b = generate_synthetic(2, 5, 0, 1.0, seed=4)
    assert np.array_equal(a.features, b.features)
    assert int(a.labels.sum()) == 0
    with pytest.raises(ValueError):
        generate_synthetic(0, 5, 5, 1.0)


# ---------------------------------------------------------------------------
# schema and scaling files


def test_schema_json_round_trip(tmp_path):
    p = tmp_path / "schema.json"
    save_schema(MIXED, p)
    assert load_schema(p) == MIXED
    save_schema(LABELED, p)
    assert load_schema(p) == LABELED


def test_schema_dict_defaults_type_to_numeric():
    s = schema_from_dict({"columns": [{"name": "a"}]})
    assert s.columns[0].kind == "numeric"
    assert "label_column" not in schema_to_dict(s)


def test_schema_file_bad_json_rejected(tmp_path):
    p = write(tmp_path, "{not json", name="schema.json")
    with pytest.raises(SchemaError):
        load_schema(p)
    with pytest.raises(SchemaError):
        schema_from_dict({"kind": "nope"})


def test_scaling_dict_round_trip():
    stats = ScalingStats(np.array([0.0, -1.5]), np.array([2.0, 3.25]))
    back = scaling_from_dict(scaling_to_dict(stats))
    assert np.array_equal(back.col_min, stats.col_min)
    assert np.array_equal(back.col_max, stats.col_max)
