"""The bundled corpus and fixture fleet are reproducible from their generators."""
from fidsched.circuit import extract_features
from fidsched.corpus import write_corpus
from fidsched.fixtures import write_fixtures
from fidsched.seeding import derive_seed
from fidsched.workload import bundled_corpus_dir, bundled_fleet_manifest, load_corpus


def test_corpus_regenerates_byte_identical(tmp_path):
    paths = write_corpus(tmp_path, seed=11)
    bundled = sorted(p.name for p in bundled_corpus_dir().glob("*.qasm"))
    assert sorted(p.name for p in paths) == bundled
    for p in paths:
        assert p.read_bytes() == (bundled_corpus_dir() / p.name).read_bytes()


def test_fixtures_regenerate_byte_identical(tmp_path):
    write_fixtures(tmp_path, derive_seed(0, "fixtures"))
    src = bundled_fleet_manifest().parent
    names = sorted(p.name for p in src.glob("*.json"))
    assert names == sorted(p.name for p in tmp_path.glob("*.json"))
    for name in names:
        assert (tmp_path / name).read_bytes() == (src / name).read_bytes()


def test_corpus_shape():
    corpus = load_corpus(bundled_corpus_dir())
    assert len(corpus) >= 40
    feats = [extract_features(c) for c in corpus]
    assert all(3 <= f.depth <= 30 for f in feats)
    assert min(f.num_qubits for f in feats) == 2 and max(f.num_qubits for f in feats) <= 27
    assert sum(f.num_qubits <= 4 for f in feats) >= 8
