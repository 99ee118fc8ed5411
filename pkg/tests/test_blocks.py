import itertools
import math

import pytest
from hypothesis import given

from macsynth.blocks import (ALOHA_CATALOG, DCF_GENOME, DOMAIN_SIZES, STAY, BlockId, Catalog,
                             DependencyKind, Genome, GenomeError, MalformedVectorError,
                             OutOfRangeError, action_table, apply_action, backoff_block_spec,
                             block_spec, decode, encode, encode_normalized, enumerate_genomes,
                             genome_space_size, neighbors, parse_genome)

from strategies import genomes


def test_option_counts():
    assert DOMAIN_SIZES == (3, 2, 4, 2, 2, 7, 2, 7)


def test_space_size_matches_brute_force_enumeration():
    brute = set(itertools.product(*(range(n) for n in DOMAIN_SIZES)))
    listed = {g.settings for g in enumerate_genomes()}
    assert genome_space_size() == len(brute) == len(listed) == 9408
    assert listed == brute


@pytest.mark.parametrize("blocks, size", [(["ack", "cs"], 4), (["data_rate"], 7),
                                          (ALOHA_CATALOG, 3 * 2 * 7 * 2 * 7)])
def test_restricted_space_size(blocks, size):
    assert genome_space_size(blocks) == size
    assert len(list(enumerate_genomes(blocks))) == size


def test_encode_examples():
    assert encode(DCF_GENOME) == [1, 1, 0, 0, 0, 1, 1, 7]
    all_off = parse_genome("off,noack,off,off,off,15,off,6")
    assert encode(all_off) == [0, 0, 0, 0, 0, 1, 0, 1]
    row1 = parse_genome("off,noack,off,2000,off,31,off,54")
    assert encode(row1) == [0, 0, 0, 1, 0, 2, 0, 7]


def test_decode_examples():
    assert decode([1, 1, 0, 0, 0, 1, 1, 7]) == DCF_GENOME
    with pytest.raises(MalformedVectorError):
        decode([0, 0, 0, 0, 0, 1, 0, 1, 9])
    with pytest.raises(OutOfRangeError) as err:
        decode([5, 1, 0, 0, 0, 1, 1, 7])
    assert err.value.block == BlockId.BACKOFF
    # parameter blocks are 1-based, so 0 is out of range for them
    with pytest.raises(OutOfRangeError):
        decode([0, 0, 0, 0, 0, 0, 0, 1])


def test_encode_is_injective_and_round_trips():
    seen = set()
    for g in enumerate_genomes():
        v = tuple(encode(g))
        assert decode(v) == g
        seen.add(v)
    assert len(seen) == 9408


@given(genomes)
def test_normalized_encoding_in_unit_interval(g):
    assert all(0.0 < x <= 1.0 for x in encode_normalized(g))


@given(genomes)
def test_neighbors_differ_in_one_coordinate(g):
    nb = neighbors(g)
    assert len(nb) == sum(n - 1 for n in DOMAIN_SIZES) == 21
    assert g not in nb
    for h in nb:
        assert sum(a != b for a, b in zip(g.settings, h.settings)) == 1
        assert g in neighbors(h)


def test_restricted_neighbors():
    assert len(neighbors(DCF_GENOME, Catalog(("ack",)))) == 1


@given(genomes)
def test_actions_reach_exactly_the_neighbors(g):
    table = action_table()
    assert len(table) == 22 and table[STAY] is None
    reached = {apply_action(g, a) for a in range(1, len(table))}
    assert reached == neighbors(g)
    assert apply_action(g, STAY) == g


def test_restricted_actions_never_touch_pinned_blocks():
    g = ALOHA_CATALOG.base
    for a in range(len(action_table(ALOHA_CATALOG))):
        assert ALOHA_CATALOG.contains(apply_action(g, a, ALOHA_CATALOG))


def test_genome_text_round_trip_and_case():
    assert parse_genome("beb,ack,OFF,off,off,15,cs,54") == DCF_GENOME
    assert str(DCF_GENOME) == "BEB,ACK,off,off,off,15,CS,54"
    with pytest.raises(GenomeError):
        parse_genome("BEB,ACK")
    with pytest.raises(OutOfRangeError):
        parse_genome("BEB,ACK,off,off,off,16,CS,54")


@given(genomes)
def test_index_round_trip(g):
    assert Genome.from_index(g.index) == g


def test_payload_limit():
    g = DCF_GENOME
    assert g.payload_limit == 1500
    assert g.replace(fragmentation="200").payload_limit == 200
    assert g.replace(aggregation="2000", fragmentation="500").payload_limit == 2000


def test_backoff_block_spec():
    spec = backoff_block_spec()
    assert "ACK_timeout" in spec.events
    assert spec.params == {"CW"} and spec.state == {"Freeze", "Countdown"}
    assert spec.function == "BEB"
    assert (BlockId.ACK, DependencyKind.STRONG) in spec.deps
    assert not block_spec(BlockId.ACK).depends_on(BlockId.BACKOFF, DependencyKind.STRONG)


def test_dependencies_are_one_directional():
    for b in BlockId:
        for target, _ in block_spec(b).deps:
            assert not block_spec(target).depends_on(b)


def test_catalog_parse_rejects_unknown_block():
    with pytest.raises(GenomeError):
        Catalog.parse("ack,warp")
    assert Catalog.parse("all").is_full
    assert math.prod(DOMAIN_SIZES) == 9408
