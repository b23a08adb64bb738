import math
import random
from fractions import Fraction

import pytest

from lzlab.construction import (
    Construction,
    ConstructionParams,
    FragmentSpec,
    SigmaExhausted,
    StageFailure,
    build_alpha,
    entropy_upper_bound,
    heights_schedule,
    sample_sparse_column,
    stage_height,
)
from lzlab.intervals import completeness_check
from lzlab.symbolic import name_measure

F = Fraction


def tiny_construction(stages=5, folds=2, h0=2, r=F(1, 256)):
    p = ConstructionParams(r=r, h0=h0, fold_schedule=(folds,) * 12)
    c = Construction(p)
    c.stage(stages)
    return c


def test_entropy_upper_bound_values():
    assert entropy_upper_bound(F(1, 256)) == pytest.approx(3 * 8 / 256)
    with pytest.raises(ValueError):
        entropy_upper_bound(F(1, 2))
    # monotone increasing on (0, 1/e)
    vals = [entropy_upper_bound(F(1, d)) for d in (256, 64, 16)]
    assert vals[0] < vals[1] < vals[2]


def test_heights_schedule_spec_examples():
    assert heights_schedule(lambda n: n, F(1, 256), 3) == [1, 23, 46, 70]
    sched = heights_schedule(lambda n: n, F(1, 2), 3)
    assert sched[0] == 1
    gaps = [b - a for a, b in zip(sched, sched[1:])]
    assert gaps == [15, 16, 17]  # minimal integers with gap > 14 + i
    assert all(b > a for a, b in zip(sched, sched[1:]))


def test_heights_schedule_table_and_errors():
    table = list(range(60))
    assert heights_schedule(table, F(1, 2), 2) == [1, 16, 32]
    with pytest.raises(SigmaExhausted):
        heights_schedule(list(range(20)), F(1, 2), 3)
    with pytest.raises(ValueError):
        heights_schedule(lambda n: -n, F(1, 2), 1)


def test_initial_gadget_masses_and_names():
    c = tiny_construction(stages=0, h0=3)
    st = c.stage(0)
    r = c.params.r
    assert st.delta.support == 2 * r
    assert st.pi.support == 1 - 2 * r
    assert st.delta.uniform_height == 3
    # the main gadget's names carry no ones
    explicit = st.pi.to_explicit()
    assert all(set(col.name) == {"0"} for col in explicit.columns)
    assert all(col.height == 6 for col in explicit.columns)


def test_val_masses_exact_stages_up_to_4():
    c = tiny_construction(stages=4)
    r = c.params.r
    for s in range(5):
        st = c.stage(s)
        assert st.delta.support == F(2, 2**s) * r
        assert st.pi.support == 1 - F(2, 2**s) * r
        assert st.phi.support == 1


def test_gamma_diagnostics():
    c = tiny_construction(stages=3)
    r = c.params.r
    for s in (1, 2, 3):
        diag = c.stage(s).diagnostics
        expected_gamma = (F(2, 2**s) * r) / (1 - F(4, 2**s) * r)
        assert diag["gamma"] == expected_gamma
        assert diag["routing_fraction"] == expected_gamma / (1 + expected_gamma)
    # the printed alternative denominator is negative/zero for s <= 2
    assert c.stage(1).diagnostics["gamma_alt_denominator"] is None
    assert c.stage(3).diagnostics["gamma_alt_denominator"] is not None


def test_remark_uniformity_generic_dp_stages_up_to_3():
    """Auxiliary towers assign every name mass 2^-l(x) * support, verified
    with the generic DP (the uniform shortcut disabled)."""
    c = tiny_construction(stages=3)
    for s in range(4):
        delta = c.stage(s).delta
        lam = delta.support
        h = delta.uniform_height
        for ln in range(1, h // 2 + 1):
            for v in range(2**ln):
                x = format(v, f"0{ln}b")
                got = name_measure(delta, x, force_generic=True)
                assert got == F(h - ln + 1, 2**ln) * lam / h
        # start-restricted form equals the Remark value exactly
        for x in ("0", "1", "01"):
            if len(x) <= h:
                got = name_measure(delta, x, restricted=True)
                want = F(h - len(x), 2 ** len(x)) * lam / h
                assert got == want


def test_wd_recorded_every_stage_and_faithful_enforced():
    c = tiny_construction(stages=4)
    for s in range(1, 5):
        st = c.stage(s)
        assert st.wd_method == "exact"
        assert 0 <= st.wd_value <= 2
    # faithful mode: stage 1 certifies wd < 1/1 with the growth schedule
    p = ConstructionParams(
        r=F(1, 128), epsilon=F(6, 25), h0=2, mode="faithful", sigma=lambda n: n, wd_mcap=256
    )
    c2 = Construction(p)
    st1 = c2.stage(1)
    assert st1.wd_value < 1
    assert st1.pi.min_height >= 2 * heights_schedule(lambda n: n, F(1, 128), 3)[3]


def test_completeness_of_early_stages_explicit():
    c = tiny_construction(stages=2)
    seq = [c.stage(0).pi.to_explicit()]
    # the extension chain is pi_{s-1} ∪ delta'' -> its fold
    for s in (1, 2):
        seq.append(c.stage(s).fold_base.to_explicit())
        seq.append(c.stage(s).pi.to_explicit())
    report = completeness_check([seq[0], seq[2], seq[4]])
    # widths decrease and supports grow along the pi chain
    assert report.widths[0] > report.widths[1] > report.widths[2]
    assert report.supports[0] <= report.supports[1] <= report.supports[2]
    # each fold extends the gadget it folds
    inner = completeness_check([seq[1], seq[2]])
    assert not any("transformation" in v for v in inner.violations), inner.violations
    inner = completeness_check([seq[3], seq[4]])
    assert not any("transformation" in v for v in inner.violations), inner.violations


def test_measure_query_examples():
    c = tiny_construction(stages=0)
    eps = F(1, 64)
    assert c.measure_query("", eps) == 1
    p1 = c.measure_query("1", eps)
    assert abs(p1 - c.params.r) <= eps
    p0 = c.measure_query("0", eps)
    assert abs(1 - p0 - p1) <= 2 * eps


def test_measure_query_additivity():
    c = tiny_construction()
    eps = F(1, 128)
    rng = random.Random(6)
    for _ in range(8):
        x = "".join(rng.choice("01") for _ in range(rng.randrange(1, 5)))
        gap = abs(
            c.measure_query(x, eps)
            - c.measure_query(x + "0", eps)
            - c.measure_query(x + "1", eps)
        )
        assert gap <= 3 * eps


def test_prob_estimate_stable_across_stages():
    c = tiny_construction()
    x = c.sample_sequence(3, 30)
    est = c.prob_estimate(x)
    deeper = name_measure(c.stage(len(c.stages) - 1 + 2).phi, x, restricted=True)
    assert est > 0
    assert abs(est - deeper) <= deeper / 4


def test_sample_sequence_contracts():
    c = tiny_construction()
    assert c.sample_sequence(9, 64) == c.sample_sequence(9, 64)
    n = 2000
    ones = 0
    samples = 40
    for i in range(samples):
        ones += c.sample_sequence(123 + i, n).count("1")
    freq = ones / (n * samples)
    # P(one) = r under the stationary measure; allow 4 binomial SEs
    r = float(c.params.r)
    assert abs(freq - r) <= 4 * math.sqrt(r * (1 - r) / (n * samples)) + 2 / n


def test_sample_matches_measure_monte_carlo():
    c = tiny_construction()
    word = "001"
    q = float(c.measure_query(word, F(1, 512)))
    hits = sum(c.sample_sequence(2000 + i, 3) == word for i in range(1500))
    se = math.sqrt(q * (1 - q) / 1500)
    assert abs(hits / 1500 - q) <= 4 * se + 0.002


def test_sampled_sequences_meet_entropy_cap():
    """Mixture code length per symbol on sampled trajectories stays within
    the partition entropy bound plus 0.05."""
    from lzlab.ktmix import MixtureCoder

    p = ConstructionParams(r=F(1, 256), h0=64, fold_schedule=(4, 4, 4, 4, 2, 2, 2, 2))
    c = Construction(p)
    n = 100_000
    x = c.sample_sequence(31, n)
    rate = MixtureCoder(kmax=4).payload_code_len(x) / n
    assert rate <= entropy_upper_bound(c.params.r) + 0.05


def test_sparse_column_walker():
    c = tiny_construction(stages=2)
    name = sample_sparse_column(c.stage(2).fold_base)
    assert set(name) == {"0"}


def test_alpha_builder_invariants():
    p = ConstructionParams(r=F(1, 256), h0=16, fold_schedule=(4, 4, 4, 4, 2, 2))
    c = Construction(p)
    sched = [
        FragmentSpec("sparse", 1, parts=8),
        FragmentSpec("incompressible", 2),
        FragmentSpec("sparse", 3, parts=3),
        FragmentSpec("incompressible", 4),
        FragmentSpec("sparse", 4, parts=2),
    ]
    trace = build_alpha(c, sched, initial_length=24, seed=5)
    assert trace.bits.count("1") >= 0
    # fragments strictly extend and respect the stage-height induction
    prev_end = 0
    for frag in trace.fragments:
        assert frag.end > prev_end or frag.index == 0
        prev_end = frag.end
        assert frag.end >= stage_height(c, frag.stage)
    # sparse fragments have ones frequency <= 2r
    for frag in trace.fragments:
        if frag.kind == "sparse":
            assert frag.ones_frequency <= 2 * float(c.params.r) + 1e-12
    # incompressible fragments carry the whole random block as segment
    inc = [f for f in trace.fragments if f.kind == "incompressible"]
    assert len(inc) == 2
    for f in inc:
        a, b = f.segment
        assert b - a == c.stage(f.stage).delta_second.uniform_height
        assert b == f.end
    # determinism
    trace2 = build_alpha(c, sched, initial_length=24, seed=5)
    assert trace2.bits == trace.bits


def test_alpha_is_positive_mass_trajectory():
    """The built word has positive measure under the construction."""
    p = ConstructionParams(r=F(1, 256), h0=8, fold_schedule=(2, 2, 2, 2, 2, 2))
    c = Construction(p)
    sched = [FragmentSpec("sparse", 1, parts=4), FragmentSpec("incompressible", 2)]
    trace = build_alpha(c, sched, initial_length=12, seed=1)
    prefix = trace.bits[: trace.fragments[-1].end]
    assert c.prob_estimate(prefix[:64]) > 0


def test_builder_rejects_short_fragments():
    p = ConstructionParams(r=F(1, 256), h0=16, fold_schedule=(4, 4))
    c = Construction(p)
    with pytest.raises(StageFailure):
        # one tiny sparse fragment cannot reach stage 2's height
        build_alpha(c, [FragmentSpec("sparse", 2, parts=1)], initial_length=1)


def test_fold_schedule_exhaustion_raises():
    c = tiny_construction(stages=0, folds=2)
    c.params = ConstructionParams(r=F(1, 256), h0=2, fold_schedule=(2,))
    c.stage(1)
    with pytest.raises(StageFailure):
        c.stage(2)
