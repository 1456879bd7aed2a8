"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines.  The desk-scale threshold reproduction uses distances {7, 9, 11} with
10^4 samples per (d, eta) point; the full-scale suite (distances {11, 13,
15}, 5 * 10^4 samples) is opt-in via GHZLOSS_FULL_SCALE=1 and takes hours.
"""

import os
import time

import numpy as np
import pytest

from ghzloss.encodings import (
    EncodingSpec,
    LossModel,
    analytic_return_prob,
    brute_force_return_prob,
    sample_bell_recovery_batch,
    standard_error,
)
from ghzloss.lattice import (
    build_ghz_network,
    build_syndrome_graphs,
    derive_check_group,
    single_site_fragment,
    unit_cell_fragment,
)
from ghzloss.montecarlo import (
    CrossingError,
    TrialConfig,
    default_workers,
    estimate_logical_loss,
    scan_thresholds,
)

ACCEPT_SAMPLES = 10_000
ACCEPT_DISTANCES = [7, 9, 11]
ACCEPT_SEED = 907

TABLE1_TARGETS = [
    (EncodingSpec(1, 1), (0.016, 0.046), 0.031),
    (EncodingSpec(1, 2), (0.038, 0.068), 0.053),
    (EncodingSpec(2, 2), (0.072, 0.102), 0.087),
    (EncodingSpec(4, 2, variant="rotated"), (0.100, 0.130), 0.115),
]
TOLERANCE = 0.015

FULL_SCALE = os.environ.get("GHZLOSS_FULL_SCALE") == "1"

pytestmark = pytest.mark.acceptance


def _report(name: str, detail: str):
    print(f"[PASS] {name}: {detail}")


@pytest.fixture(scope="session")
def table1_scans():
    workers = default_workers()
    out = {}
    for spec, window, _target in TABLE1_TARGETS:
        etas = [round(float(v), 10) for v in np.linspace(window[0], window[1], 8)]
        out[spec.label()] = scan_thresholds(
            spec,
            "nl",
            ACCEPT_DISTANCES,
            etas,
            ACCEPT_SAMPLES,
            master_seed=ACCEPT_SEED,
            workers=workers,
        )
    return out


class TestReturnProbabilityOracle:
    def test_analytic_equals_brute_force(self):
        t0 = time.time()
        worst = 0.0
        for n, m in [(1, 1), (1, 2), (2, 1), (2, 2), (3, 2), (4, 2)]:
            for variant in ("shor", "rotated"):
                spec = EncodingSpec(n, m, variant=variant)
                for kind in ("nl", "lo"):
                    for eta in (0.0, 0.05, 0.1, 0.2, 0.5):
                        model = LossModel(eta, kind)
                        a = analytic_return_prob(spec, model)
                        b = brute_force_return_prob(spec, model)
                        worst = max(
                            worst, abs(a.p_zz - b.p_zz), abs(a.p_xx - b.p_xx)
                        )
        elapsed = time.time() - t0
        assert worst <= 1e-12, f"oracle deviation {worst:.3e}"
        assert elapsed < 1.0, f"oracle sweep took {elapsed:.2f}s"
        _report(
            "return-probability oracle",
            f"max |analytic - enumeration| = {worst:.2e} in {elapsed * 1000:.0f} ms",
        )


class TestSamplerFidelity:
    @pytest.mark.parametrize(
        "spec,kind", [(EncodingSpec(2, 2), "nl"), (EncodingSpec(1, 2), "lo")]
    )
    def test_million_draw_marginals(self, spec, kind):
        draws = 1_000_000
        model = LossModel(0.1, kind)
        rng = np.random.Generator(np.random.Philox(ACCEPT_SEED))
        zz, xx = sample_bell_recovery_batch(spec, model, rng, draws)
        ana = analytic_return_prob(spec, model)
        for label, emp, expect in [("zz", zz.mean(), ana.p_zz), ("xx", xx.mean(), ana.p_xx)]:
            sigma = standard_error(expect, draws)
            assert abs(emp - expect) < 3 * sigma, (
                f"{spec.label()} {kind} {label}: {emp:.5f} vs {expect:.5f}"
            )
        _report(
            "sampler fidelity",
            f"{spec.label()} {kind}: zz {zz.mean():.5f}~{ana.p_zz:.5f}, "
            f"xx {xx.mean():.5f}~{ana.p_xx:.5f} (3 sigma at 1e6 draws)",
        )


class TestDerivedCheckStructure:
    def test_checks_emerge_and_graphs_are_consistent(self):
        t0 = time.time()
        # Four-way measurement: the zz parity emerges as the only check.
        single = single_site_fragment()
        group = derive_check_group(single)
        assert group.rank == 1
        (diamond,) = group.checks
        assert {k for k, _ in diamond.outcomes} == {"zz"}
        assert len(diamond.outcomes) == 4 and diamond.parity == 1

        # Unit cell: a six-face x-product volume check emerges.
        cell_net = unit_cell_fragment()
        cell_group = derive_check_group(cell_net)
        face_ids = {s.index for s in cell_net.sites if s.kind == "face"}
        volume = cell_group.find_with_xprods(face_ids)
        assert volume is not None, "no six-face volume element in the group"
        assert len(face_ids) == 6

        # Full graphs: two memberships per bulk outcome, partitioned sides.
        net = build_ghz_network(3)
        primal, dual = build_syndrome_graphs(3)
        assert not (primal.outcome_ids & dual.outcome_ids)
        assert primal.outcome_ids | dual.outcome_ids == set(range(net.num_outcomes))
        for graph in (primal, dual):
            for oid, (u, v) in graph.endpoint_of.items():
                assert u != v
        elapsed = time.time() - t0
        assert elapsed < 10.0
        _report(
            "derived check structure",
            f"zz-parity and volume checks emerge from the group intersection; "
            f"graph invariants hold ({elapsed:.1f}s)",
        )


@pytest.mark.slow
class TestTableOneDeskScale:
    def test_thresholds_within_tolerance_and_ordered(self, table1_scans):
        thresholds = {}
        for spec, _window, target in TABLE1_TARGETS:
            est = table1_scans[spec.label()]
            thresholds[spec.label()] = est.threshold
            assert abs(est.threshold - target) <= TOLERANCE, (
                f"{spec.label()}: got {est.threshold:.4f}, expected "
                f"{target:.3f} +- {TOLERANCE}"
            )
        ordered = [thresholds[s.label()] for s, _w, _t in TABLE1_TARGETS]
        assert ordered == sorted(ordered) and len(set(ordered)) == 4, (
            f"threshold ladder not strictly increasing: {ordered}"
        )
        detail = ", ".join(
            f"{s.label()}={thresholds[s.label()] * 100:.2f}% (target {t * 100:.1f}%)"
            for s, _w, t in TABLE1_TARGETS
        )
        _report("desk-scale threshold ladder", detail)

    @pytest.mark.skipif(not FULL_SCALE, reason="opt-in full-scale run (hours)")
    def test_full_scale_reproduction(self):
        workers = default_workers()
        details = []
        for spec, window, target in TABLE1_TARGETS:
            etas = [round(float(v), 10) for v in np.linspace(window[0], window[1], 8)]
            est = scan_thresholds(
                spec,
                "nl",
                [11, 13, 15],
                etas,
                50_000,
                master_seed=ACCEPT_SEED,
                workers=workers,
                force=True,
            )
            details.append(f"{spec.label()}={est.threshold * 100:.2f}%")
            assert abs(est.threshold - target) <= TOLERANCE
        _report("full-scale threshold ladder", ", ".join(details))


@pytest.mark.slow
class TestNonlinearBeatsLinearOptical:
    def test_lo_threshold_below_nl(self, table1_scans):
        nl = table1_scans["qpc:1,1"]
        spec = EncodingSpec(1, 1)
        # The lo model keeps half the zz outcomes even without loss, which
        # percolates at every eta: curves cannot cross, and any probe below
        # the nl threshold shows a saturated, distance-stable failure rate.
        with pytest.raises(CrossingError):
            scan_thresholds(
                spec,
                "lo",
                [3, 5],
                nl.etas[:2],
                512,
                master_seed=ACCEPT_SEED,
                workers=1,
            )
        probe_eta = max(0.0, nl.ci_low - 0.02)
        rates = {}
        for di, d in enumerate((ACCEPT_DISTANCES[0], ACCEPT_DISTANCES[-1])):
            cfg = TrialConfig(
                spec,
                "lo",
                probe_eta,
                d,
                ACCEPT_SAMPLES,
                master_seed=ACCEPT_SEED,
                distance_index=di,
            )
            rates[d] = estimate_logical_loss(cfg, workers=default_workers())
        assert all(r.ci_low > 0.5 for r in rates.values()), rates
        assert probe_eta < nl.ci_low
        _report(
            "nonlinear beats linear-optical",
            f"lo logical loss at eta={probe_eta:.3f} is "
            f"{min(r.ci_low for r in rates.values()):.3f}+ at 95%, while the nl "
            f"threshold is {nl.threshold:.4f} (ci low {nl.ci_low:.4f})",
        )


@pytest.mark.slow
class TestDeterminism:
    def test_table1_rate_columns_identical_across_workers(self, tmp_path):
        from ghzloss.cli import main

        outs = []
        for workers, sub in ((1, "a"), (3, "b")):
            outdir = tmp_path / sub
            code = main(
                [
                    "table1",
                    "--distances", "7,9",
                    "--samples", "1200",
                    "--eta-steps", "4",
                    "--seed", str(ACCEPT_SEED),
                    "--workers", str(workers),
                    "--out", str(outdir),
                ]
            )
            assert code == 0
            outs.append((outdir / "table1.csv").read_text())
        assert outs[0] == outs[1], "CSV outputs differ between worker counts"
        _report(
            "determinism",
            "table1 CSVs byte-identical for --workers 1 and 3 "
            f"({len(outs[0].splitlines())} lines)",
        )


@pytest.mark.slow
class TestPropertySuite:
    def test_erasure_rate_monotone_in_eta(self):
        for spec in (EncodingSpec(1, 1), EncodingSpec(4, 2, variant="rotated")):
            for kind in ("nl", "lo"):
                last_zz, last_xx = -1.0, -1.0
                for eta in np.linspace(0.0, 1.0, 100):
                    p = analytic_return_prob(spec, LossModel(float(eta), kind))
                    erase_zz, erase_xx = 1 - p.p_zz, 1 - p.p_xx
                    assert erase_zz >= last_zz - 1e-12
                    assert erase_xx >= last_xx - 1e-12
                    last_zz, last_xx = erase_zz, erase_xx
        _report("erasure monotonicity", "per-outcome erasure rates rise with eta")

    def test_percolation_monotone(self):
        from ghzloss.montecarlo import compile_lattice, logical_loss

        comp = compile_lattice(3)
        rng = np.random.default_rng(ACCEPT_SEED)
        ids_p = sorted(comp.primal.outcome_ids)
        ids_d = sorted(comp.dual.outcome_ids)
        flips = 0
        for _ in range(200):
            base_p = {i for i in ids_p if rng.random() < 0.22}
            base_d = {i for i in ids_d if rng.random() < 0.22}
            more_p = base_p | {i for i in ids_p if rng.random() < 0.15}
            more_d = base_d | {i for i in ids_d if rng.random() < 0.15}
            if logical_loss(comp, base_p, base_d) and not logical_loss(
                comp, more_p, more_d
            ):
                flips += 1
        assert flips == 0
        _report("percolation monotonicity", "adding erasures never cured a loss")

    def test_logical_rate_monotone_in_eta(self, table1_scans):
        worst = 0.0
        for est in table1_scans.values():
            for d in est.distances:
                series = [est.rates[(d, eta)] for eta in est.etas]
                for a, b in zip(series, series[1:]):
                    sigma = np.sqrt(
                        max(a.rate * (1 - a.rate), 1e-9) / a.samples
                        + max(b.rate * (1 - b.rate), 1e-9) / b.samples
                    )
                    worst = max(worst, a.rate - b.rate)
                    assert b.rate >= a.rate - 3 * sigma, (
                        f"{est.encoding.label()} d={d}: rate inversion "
                        f"{a.rate:.4f} -> {b.rate:.4f}"
                    )
        _report(
            "logical rate monotonicity",
            f"no significant inversion on any scanned curve "
            f"(worst raw dip {worst:.4f})",
        )

    def test_rotated_swap_identity(self):
        for n, m in [(1, 2), (2, 2), (4, 2)]:
            for kind in ("nl", "lo"):
                for eta in (0.0, 0.1, 0.3):
                    shor = analytic_return_prob(EncodingSpec(n, m), LossModel(eta, kind))
                    rot = analytic_return_prob(
                        EncodingSpec(n, m, variant="rotated"), LossModel(eta, kind)
                    )
                    assert rot.p_zz == pytest.approx(shor.p_xx, abs=1e-15)
                    assert rot.p_xx == pytest.approx(shor.p_zz, abs=1e-15)
        _report("rotated swap identity", "rotated probabilities equal swapped pair")

    def test_distance_scaling_directions(self, table1_scans):
        # Distances 3 and 7 keep both sides of the threshold away from the
        # saturated regime at this sample count, so the orderings are strict.
        nl = table1_scans["qpc:1,1"]
        spec = EncodingSpec(1, 1)
        workers = default_workers()
        below = nl.threshold - 0.02
        above = nl.threshold + 0.02
        d_small, d_large = 3, 7
        res = {}
        for tag, eta, samples in (
            ("below", below, ACCEPT_SAMPLES),
            # Both curves sit within a per-mille of saturation here, so the
            # ordering needs more shots to separate at 95%.
            ("above", above, 3 * ACCEPT_SAMPLES),
        ):
            for di, d in enumerate((d_small, d_large)):
                cfg = TrialConfig(
                    spec, "nl", eta, d, samples,
                    master_seed=ACCEPT_SEED + 1, distance_index=di,
                )
                res[(tag, d)] = estimate_logical_loss(cfg, workers=workers)
        assert res[("below", d_large)].ci_high < res[("below", d_small)].ci_low, (
            "below threshold, larger distance must suppress loss"
        )
        assert res[("above", d_large)].ci_low > res[("above", d_small)].ci_high, (
            "above threshold, larger distance must amplify loss"
        )
        _report(
            "distance scaling",
            f"below: d{d_small} {res[('below', d_small)].rate:.4f} > "
            f"d{d_large} {res[('below', d_large)].rate:.4f}; above: "
            f"d{d_small} {res[('above', d_small)].rate:.4f} < "
            f"d{d_large} {res[('above', d_large)].rate:.4f}",
        )
