"""End-to-end acceptance gate.

Each test below is one release criterion, named by what it checks and
printing a single PASS line with the measured numbers (visible under
``pytest -s``); a failure shows up as the usual FAILED line for exactly
that criterion.  Budgets assume a single CPU core.
"""

import math
import time

import numpy as np
import pytest

import robintri as r
from robintri import _quad

S_THIRD = 1.0 / math.sqrt(3.0)


def _report(name: str, detail: str) -> None:
    print(f"ACCEPTANCE {name}: PASS ({detail})")


class TestClosedFormAgainstFem:
    def test_fem_reproduces_equilateral_eigenvalue(self):
        """Extrapolated FEM matches the transcendental eigenvalue to 1e-4
        relative by level 7, with second-order convergence, for six
        (alpha, area) combinations."""
        worst_rel = 0.0
        orders = []
        t0 = time.time()
        for S in (S_THIRD, 1.0):
            for alpha in (-0.5, -1.0, -4.0):
                res = r.eigenvalue_converged(
                    r.equilateral_params(S), alpha, rel_tol=1e-6, max_level=7
                )
                lam0 = r.lambda0(alpha, S)
                rel = abs(res.lambda1 - lam0) / abs(lam0)
                worst_rel = max(worst_rel, rel)
                assert res.level <= 7
                assert rel < 1e-4
                errs = [h - lam0 for h in res.history]
                assert all(e > 0.0 for e in errs)  # conforming upper bounds
                order = math.log2(errs[-2] / errs[-1])
                orders.append(order)
                assert 1.7 <= order <= 2.3
        elapsed = time.time() - t0
        _report(
            "closed-form-vs-fem",
            f"worst rel {worst_rel:.2e}, orders {min(orders):.2f}..{max(orders):.2f}, {elapsed:.1f}s",
        )


class TestThresholdConstants:
    def test_threshold_constants(self):
        """t0 to machine precision, the g-root near 0.943, and the two
        coupling thresholds scaling as -0.92/sqrt(S) and -1.63/sqrt(S)."""
        t0_ref = math.sqrt(9.0 - math.sqrt(33.0)) / 2.0
        assert abs(r.T0 - t0_ref) < 4e-16

        root = r.g_root()
        assert abs(root - 0.943) < 1e-2
        # it really is a sign change of g
        assert r.g_threshold(root - 1e-6) < 0.0 < r.g_threshold(root + 1e-6)

        for S in (S_THIRD, 1.0, 2.7):
            simple, improved = r.local_optimality_alpha_bound(S)
            assert abs(simple - (-0.92 / math.sqrt(S))) < 5e-3 * 0.92 / math.sqrt(S)
            assert abs(improved - (-1.63 / math.sqrt(S))) < 5e-3 * 1.63 / math.sqrt(S)
        _report(
            "threshold-constants",
            f"t0 {r.T0:.15f}, g-root {root:.4f}, bounds at S=1 "
            f"({r.local_optimality_alpha_bound(1.0)[0]:.4f}, "
            f"{r.local_optimality_alpha_bound(1.0)[1]:.4f})",
        )


class TestClosedFormNorms:
    def test_norms_match_quadrature(self):
        """Closed-form gradient/boundary/interior norms of the equilateral
        ground state agree with adaptive quadrature to 1e-9 relative."""
        worst = 0.0
        for alpha in (-0.5, -2.0, -8.0):
            sol = r.solve_equilateral(alpha, S_THIRD)
            field = r.ground_state(sol)
            d1, bdry, l2 = r.closed_form_norms(sol)
            cc, bb = r.c0(S_THIRD), r.b0(S_THIRD)
            verts = np.array([[-cc, 0.0], [cc, 0.0], [0.0, bb]])

            def moments(pts):
                vals, grads = field.values_and_grads(pts)
                return np.column_stack([grads[:, 0] ** 2, vals**2])

            d1_q, l2_q = _quad.triangle_integrate(moments, verts, n=12, tol=1e-13)
            bdry_q = sum(
                float(
                    _quad.segment_integrate(
                        lambda p: field.values_and_grads(p)[0] ** 2,
                        verts[i],
                        verts[j],
                        n=12,
                        tol=1e-13,
                    )
                )
                for i, j in ((0, 1), (0, 2), (1, 2))
            )
            for closed, quad in ((d1, d1_q), (bdry, bdry_q), (l2, l2_q)):
                rel = abs(closed - quad) / abs(quad)
                worst = max(worst, rel)
                assert rel < 1e-9
        _report("closed-form-norms", f"worst rel {worst:.2e} over alpha in (-0.5,-2,-8)")


class TestCriticalityAndHessian:
    def test_equilateral_is_a_critical_point_with_negative_hessian(self):
        """Finite differences at the equilateral shape: vanishing gradient
        and mixed second derivative on the 1e-3 scale, diagonal second
        derivatives below their closed-form upper bounds and strictly
        negative.  Budget: under a minute."""
        S, alpha = S_THIRD, -0.5
        cc = r.c0(S)
        t0 = time.time()
        fd = r.fd_derivatives_at_equilateral(alpha, S, h=1e-2 * cc)
        elapsed = time.time() - t0
        lam0 = abs(r.lambda0(alpha, S))
        grad_scale = 1e-3 * lam0 / cc
        hess_scale = 1e-3 * lam0 / (cc * cc)
        assert abs(fd.grad_a) < grad_scale
        assert abs(fd.grad_c) < grad_scale
        assert abs(fd.hess_ac) < hess_scale
        hb = r.hessian_upper_bounds(alpha, S)
        assert fd.hess_aa <= hb.bound_aa + hess_scale
        assert fd.hess_cc <= hb.bound_cc + hess_scale
        assert fd.hess_aa < 0.0 and fd.hess_cc < 0.0
        assert hb.bound_aa < 0.0 and hb.bound_cc < 0.0
        assert elapsed < 60.0
        _report(
            "criticality-hessian",
            f"|grad|<={max(abs(fd.grad_a), abs(fd.grad_c)):.1e}, "
            f"hess ({fd.hess_aa:.3f}, {fd.hess_cc:.3f}) vs bounds "
            f"({hb.bound_aa:.3f}, {hb.bound_cc:.3f}), {elapsed:.1f}s",
        )


class TestCertificateSoundness:
    def test_certified_cells_beat_fem_with_margin(self):
        """21x21 sweep over (a, alpha) in [0,3] x [-8,-0.05] at c = S = 1/sqrt(3):
        every cell certified by any closed-form criterion keeps the FEM value
        at least ten error estimates below the equilateral eigenvalue."""
        alphas = [float(x) for x in np.linspace(-8.0, -0.05, 21)]
        avals = [float(x) for x in np.linspace(0.0, 3.0, 21)]
        t0 = time.time()
        res = r.soundness_sweep(alphas, avals, c=S_THIRD, S=S_THIRD)
        elapsed = time.time() - t0
        certified = [row for row in res.rows if row[5] == 1]
        assert certified  # the sweep exercises the certificates
        contradictions = [row for row in res.rows if row[10] != 1]
        assert contradictions == []
        for row in certified:
            assert row[9] == 1  # lambda_fem <= lambda0 - 10*err
        _report(
            "certificate-soundness",
            f"{len(certified)}/{len(res.rows)} cells certified, 0 contradictions, {elapsed:.0f}s",
        )


class TestConjectureGrid:
    def test_eigenvalue_never_exceeds_equilateral_value(self):
        """11x11 grid (a, c) in [0,3] x [0.2,3] at S = 1/sqrt(3) for three
        couplings: the FEM eigenvalue stays below the equilateral one up to
        the combined FEM tolerance.  Budget: minutes.

        Away from the equilateral corner of the grid the eigenvalue drops far
        below lambda0 and the raw conforming bound already decides the
        comparison at coarse levels, so each cell runs a short ladder; only the
        near-equilateral cells need the error estimate to carry the verdict."""
        t0 = time.time()
        worst_margin = -math.inf
        strict = 0
        total = 0
        for alpha in (-0.5, -2.0, -8.0):
            lam0 = r.lambda0(alpha, S_THIRD)
            pad_floor = 1e-9 * max(1.0, abs(lam0))
            for a in np.linspace(0.0, 3.0, 11):
                for c in np.linspace(0.2, 3.0, 11):
                    tri = r.make_triangle(float(a), float(c), S_THIRD)
                    res = r.eigenvalue_converged(tri, alpha, rel_tol=1e-3, max_level=7)
                    total += 1
                    pad = 10.0 * res.residual + pad_floor
                    worst_margin = max(worst_margin, res.lambda1 - lam0 - pad)
                    assert res.lambda1 <= lam0 + pad
                    if res.lambda1 <= lam0:
                        strict += 1
        elapsed = time.time() - t0
        _report(
            "conjecture-grid",
            f"{total} cells, {strict} strict, worst margin-pad {worst_margin:.2e}, {elapsed:.0f}s",
        )


class TestInvariantBundle:
    def test_form_change_of_variables(self):
        """Hat-form evaluation equals direct quadrature of the transported
        field on the physical triangle (1e-8 relative)."""
        rng = np.random.default_rng(20260815)
        worst = 0.0
        for _ in range(4):
            alpha = -float(rng.uniform(0.3, 3.0))
            params = r.make_triangle(
                float(rng.uniform(-1.5, 1.5)), float(rng.uniform(0.4, 1.5)), S_THIRD
            ).params
            sol = r.solve_equilateral(alpha, params.S)
            psi = r.ground_state(sol)
            hat = r.form_hat(alpha, params, psi)

            tri = r.make_triangle(params.a, params.c, params.S)
            amap = r.affine_map(params)
            inv = np.asarray(amap.inverse_matrix)
            verts = tri.vertex_array()

            def moments(pts):
                ref_pts = r_pull(pts)
                vals, grads = psi.values_and_grads(ref_pts)
                phys = grads @ inv
                return np.column_stack([phys[:, 0] ** 2 + phys[:, 1] ** 2, vals**2])

            def r_pull(pts):
                return np.asarray(pts, dtype=float) @ inv.T

            grad_q, l2_q = _quad.triangle_integrate(moments, verts, n=10, tol=1e-13)
            bdry_q = sum(
                float(
                    _quad.segment_integrate(
                        lambda p: psi.values_and_grads(r_pull(p))[0] ** 2,
                        verts[i],
                        verts[j],
                        n=12,
                        tol=1e-13,
                    )
                )
                for i, j in ((0, 1), (0, 2), (1, 2))
            )
            for closed, quad in (
                (hat.gradient_term, grad_q),
                (hat.boundary_term, alpha * bdry_q),
                (hat.l2_norm_sq, l2_q),
            ):
                rel = abs(closed - quad) / abs(quad)
                worst = max(worst, rel)
                assert rel < 1e-8
        _report("form-change-of-variables", f"worst rel {worst:.2e} over 4 shapes")

    def test_sector_gradient_identity(self):
        """The sector field's gradient norm is exactly (alpha/sin(theta/2))^2
        times its interior norm (1e-10 by quadrature)."""
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(6):
            alpha = -float(rng.uniform(0.3, 6.0))
            tri = r.make_triangle(
                float(rng.uniform(-2, 2)),
                float(rng.uniform(0.3, 1.5)),
                float(rng.uniform(0.3, 1.5)),
            )
            from robintri.trial import SectorExponential

            field = SectorExponential.from_triangle(tri, alpha)
            verts = tri.vertex_array()

            def moments(pts):
                vals, grads = field.values_and_grads(pts)
                return np.column_stack(
                    [vals**2, grads[:, 0] ** 2 + grads[:, 1] ** 2]
                )

            l2, grad = _quad.triangle_integrate(moments, verts, n=10, tol=1e-13)
            rate = alpha / math.sin(0.5 * tri.theta_star)
            rel = abs(grad - rate * rate * l2) / abs(grad)
            worst = max(worst, rel)
            assert rel < 1e-10
        _report("sector-gradient-identity", f"worst rel {worst:.2e} over 6 shapes")

    def test_area_monotonicity_ordering(self):
        for alpha in (-0.5, -2.0):
            res = r.verify_monotone(alpha, S_THIRD, rel_tol=1e-4)
            (row,) = res.rows
            assert row[-2] == 1 and row[-1] == "ok"
            assert row[1] < row[2] < row[3] < 0.0  # closed form over S/2, S, 2S
            assert row[4] < row[5] < row[6] < 0.0  # FEM over the same areas
        _report("area-monotonicity", "orderings hold at alpha in (-0.5, -2)")

    def test_scan_reflection_symmetry(self):
        res = r.run_scan(
            r.ScanConfig(
                mode="transplant-region",
                alpha_range=(-2.0, -0.1, 4),
                a_range=(-1.5, 1.5, 9),
                output_path="unused.csv",
            )
        )
        deltas = {}
        for row in res.rows:
            deltas[(row[0], row[1])] = row[2]
        for (alpha, a), d in deltas.items():
            assert abs(d - deltas[(alpha, -a)]) < 1e-12 * max(1.0, abs(d))
        for grid_row in res.verdict_grid:
            assert grid_row == tuple(reversed(grid_row))
        _report("reflection-symmetry", "delta even in a; verdict grid palindromic")

    def test_csv_determinism(self, tmp_path):
        cfg = r.ScanConfig(
            mode="condition-region",
            alpha_range=(-8.0, -1.0, 4),
            a_range=(0.0, 2.0, 5),
        )
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        r.emit_csv(r.run_scan(cfg), str(p1))
        r.emit_csv(r.run_scan(cfg), str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        _report("csv-determinism", "byte-identical re-run")

    def test_perimeter_variant_margins(self):
        """Perimeter-normalised comparison strictly favours the equilateral
        on a near-equilateral grid at alpha = -0.5."""
        cc = r.c0(S_THIRD)
        grid = [
            (fa * cc, fc * cc)
            for fa in (0.05, 0.2, 0.4)
            for fc in (0.85, 0.95, 1.05, 1.2)
        ]
        res = r.verify_perimeter_variant(-0.5, S_THIRD, grid)
        for row in res.rows:
            assert row[-1] == "ok" and row[-2] == 1
            assert row[7] < 0.0  # scaled-triangle link
            assert row[8] < 0.0  # dilation link
            assert row[9] < 0.0  # combined margin
        _report(
            "perimeter-variant-margins",
            f"all {len(res.rows)} margins negative, worst "
            f"{max(row[9] for row in res.rows):.2e}",
        )
