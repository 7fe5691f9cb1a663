import json

import numpy as np
import pytest

from Errors import InputValidationError
from ModelConfig import OlarfdssomConfig
from Olarfdssom import Olarfdssom, SomMap
from SomSerializer import SomSerializer


@pytest.fixture
def trained(som_config, category_pattern):
    rng = np.random.default_rng(8)
    model = Olarfdssom(som_config)
    for step in range(120):
        model.train(category_pattern(step // 15 % 3, rng))
    return model.snapshot()


def test_hex_encoding_is_lossless(trained, som_config):
    serializer = SomSerializer("hex")
    som, config = serializer.loads(serializer.dumps(trained, som_config))
    assert config == som_config
    assert som.nwins == trained.nwins and som.next_id == trained.next_id
    assert som.connections == trained.connections
    for a, b in zip(trained.nodes, som.nodes):
        assert a.id == b.id and a.wins == b.wins
        np.testing.assert_array_equal(a.center, b.center)
        np.testing.assert_array_equal(a.delta, b.delta)
        np.testing.assert_array_equal(a.relevance, b.relevance)


@pytest.mark.parametrize("encoding", ["fixed6", "hex"])
def test_document_text_is_stable(trained, som_config, encoding):
    serializer = SomSerializer(encoding)
    text = serializer.dumps(trained, som_config)
    som, config = serializer.loads(text)
    assert serializer.dumps(som, config) == text


def test_fixed6_is_rounded(trained, som_config):
    document = json.loads(SomSerializer().dumps(trained, som_config))
    assert document["format"] == "olarfdssom-state"
    assert document["version"] == 1
    assert all(len(v.split(".")[1]) == 6 for v in document["nodes"][0]["center"])


def test_empty_map(som_config):
    serializer = SomSerializer()
    som, _ = serializer.loads(serializer.dumps(SomMap(), som_config))
    assert len(som) == 0
    assert som.nwins == 1


def test_save_and_load(tmp_path, trained, som_config):
    path = SomSerializer("hex").save(trained, som_config, tmp_path / "state.json")
    som, _ = SomSerializer().load(path)
    assert [n.id for n in som.nodes] == [n.id for n in trained.nodes]


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.update(format="other"), "not an"),
        (lambda d: d.update(version=2), "unsupported"),
        (lambda d: d.update(connections=[[0, 99]]), "missing nodes"),
        (lambda d: d.update(encoding="base64"), "unknown float encoding"),
    ],
)
def test_rejects_bad_documents(trained, mutate, message):
    document = json.loads(SomSerializer().dumps(trained, OlarfdssomConfig()))
    mutate(document)
    with pytest.raises(InputValidationError, match=message):
        SomSerializer().loads(json.dumps(document))


def test_rejects_unknown_encoding():
    with pytest.raises(InputValidationError):
        SomSerializer("decimal")
