"""Figure scenarios: each builds trajectories, crossings and spectra from the library."""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from . import circuits as cc
from . import classical as cl
from . import lindblad as lb
from . import monotones as mo
from . import numkit as nk
from . import optimizer as op
from . import symmetry as sym

MONOTONE_TOL = 1e-9


class ConfigError(ValueError):
    pass


class MonotonicityError(ArithmeticError):
    pass


@dataclass
class Context:
    seed: int = 0
    realizations: int = 1
    threads: int = 1

    def sub_seeds(self):
        """Realization r always draws from the r-th child of the base seed."""
        return np.random.SeedSequence(self.seed).spawn(self.realizations)

    def map(self, fn, items):
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]


@dataclass
class Record:
    trajectory: mo.MonotoneTrajectory
    seed: int


@dataclass
class ScenarioResult:
    records: List[Record] = field(default_factory=list)
    crossings: List[mo.CrossingReport] = field(default_factory=list)
    spectrum: List[tuple] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)

    def add(self, times, values, label, monotone, tag="", seed=0):
        tr = mo.MonotoneTrajectory(times, values, label, monotone, tag)
        self.records.append(Record(tr, seed))
        return tr

    def find(self, label, monotone, tag=""):
        for r in self.records:
            t = r.trajectory
            if t.label == label and t.monotone == monotone and t.tag == tag:
                return t
        raise KeyError((label, monotone, tag))

    def cross(self, a, b):
        rep = mo.crossing_times(a, b)
        rep.tag = f"{a.monotone}:{a.tag}" if a.tag else a.monotone
        self.crossings.append(rep)
        return rep

    def add_spectrum(self, eigenvalues, sector="", realization=0):
        for w in np.atleast_1d(eigenvalues):
            self.spectrum.append((float(np.real(w)), float(np.imag(w)), str(sector), int(realization)))


@dataclass(frozen=True)
class ScenarioInfo:
    name: str
    figure: str
    description: str
    defaults: Dict[str, object]
    markovian: bool
    runner: Callable
    realizations: int = 1

    def resolve(self, overrides):
        """Merge overrides into the defaults, rejecting unknown keys and wrong types."""
        params = dict(self.defaults)
        for key, value in (overrides or {}).items():
            if key not in self.defaults:
                raise ConfigError(f"unknown parameter {key!r} for {self.name}")
            params[key] = _coerce(key, self.defaults[key], value)
        return params


def _coerce(key, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{key} must be a finite number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key} must be a list")
        return value
    raise ConfigError(f"cannot override {key}")


def _grid(p):
    return np.linspace(0.0, p["t_max"], p["n_times"])


def _bloch_state(r):
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) > 1 + 1e-12:
        raise ConfigError("Bloch vector longer than 1")
    return 0.5 * np.eye(2) + r[0] * nk.SX + r[1] * nk.SY + r[2] * nk.SZ


def _bloch_vector(rho):
    return [float(2 * np.trace(rho @ s).real) for s in (nk.SX, nk.SY, nk.SZ)]


def random_noise_state(d, rng):
    """X^dag X / Tr[X] with X Hermitian, entries' real and imaginary parts uniform in [0, 1]."""
    a = rng.uniform(size=(d, d)) + 1j * rng.uniform(size=(d, d))
    x = 0.5 * (a + a.conj().T)
    return x.conj().T @ x / np.trace(x).real


def noisy_thermal_state(h, beta, gamma, rng):
    rho = mo.gibbs_state(h, beta) + gamma * random_noise_state(len(h), rng)
    return nk.hermitian_part(rho / np.trace(rho).real)


def _tag_alpha(a):
    return f"alpha={a:g}"


def _abelian_sector_spectrum(res, gen, action):
    for mu, w in sym.sector_spectrum(gen, action).items():
        res.add_spectrum(w, f"mu={mu:g}")


def _divergence_family(res, times, states_by_label, reference_fn, monotone):
    """Petz-Renyi family of every labelled state sequence against ``reference_fn``."""
    for alpha in mo.ALPHA_GRID:
        tag = _tag_alpha(alpha)
        trs = []
        for label, states in states_by_label.items():
            vals = [mo.divergence(r, reference_fn(r), alpha) for r in states]
            trs.append(res.add(times, vals, label, monotone, tag))
        for a, b in itertools.combinations(trs, 2):
            res.cross(a, b)


def _fit_rate(times, values, window):
    m = (times >= window[0]) & (times <= window[1])
    return float(np.polyfit(times[m], np.log(values[m]), 1)[0])


# classical thermal Mpemba in an Ising chain


def run_classical_kl(p, ctx):
    params = cl.IsingChainParams(p["J"], p["h"], p["n_spins"], p["beta_e"], p["beta_i"])
    gen = cl.ising_generator(params, p["rates"])
    thermal = cl.gibbs_distribution(cl.ising_energies(params), params.beta_i)
    cfg = op.MetropolisConfig(slow_mode_count=p["slow_modes"], iterations=p["iterations"], seed=ctx.seed,
                              restarts=p["restarts"], threads=ctx.threads)
    best, history = op.metropolis_permute(gen, thermal, cfg)
    t = _grid(p)
    res = ScenarioResult()
    trs = {}
    for label, p0 in (("thermal", thermal), ("optimized", best)):
        vals = [cl.kl_divergence(q, gen.stationary) for q in cl.evolve_classical_grid(gen, p0, t)]
        trs[label] = res.add(t, vals, label, "KL")
    res.cross(trs["optimized"], trs["thermal"])
    w = gen.spectrum.eigenvalues
    res.add_spectrum(w)
    res.summary = {
        "final_cost": history[-1],
        "predicted_rate_thermal": float(2 * w[1].real),
        "predicted_rate_optimized": float(2 * w[3].real),
        "fitted_rate_thermal": _fit_rate(t, trs["thermal"].values, p["fit_thermal"]),
        "fitted_rate_optimized": _fit_rate(t, trs["optimized"].values, p["fit_optimized"]),
        "optimized_state": best.tolist(),
    }
    return res


# thermal Mpemba of a single qubit under the Davies map


def run_davies_thermal(p, ctx):
    model = lb.qubit_davies(p["h"], p["beta"])
    spec = lb.model_spectrum(model)
    rho_rand = _bloch_state(p["bloch"])
    cfg = op.MetropolisConfig(slow_mode_count=p["slow_modes"], iterations=p["iterations"], seed=ctx.seed,
                              restarts=p["restarts"], threads=ctx.threads)
    rho_opt, _, history = op.metropolis_rotate(spec, rho_rand, cfg)
    t = _grid(p)
    states = {"random": lb.evolve_density_grid(spec, rho_rand, t),
              "optimized": lb.evolve_density_grid(spec, rho_opt, t)}
    res = ScenarioResult()
    h = model.hamiltonian
    trs = [res.add(t, [mo.free_energy_excess(r, h, p["beta"]) for r in s], label, "free_energy")
           for label, s in states.items()]
    res.cross(trs[1], trs[0])
    _divergence_family(res, t, {k: states[k] for k in ("optimized", "random")},
                       lambda r: spec.steady_state, "athermality")
    _abelian_sector_spectrum(res, spec.generator, sym.TimeTranslationAction(h))
    res.summary = {
        "final_cost": history[-1],
        "optimized_bloch": _bloch_vector(rho_opt),
        "crossing_times_alpha": {c.tag: c.crossing_times for c in res.crossings if c.tag.startswith("athermality")},
    }
    return res


# mode occupancy of tilted U(1) states


def run_modes(p, ctx):
    n = p["n_qubits"]
    action = sym.U1Action(nk.collective_spin(n)[2])
    ref = nk.pure_state(cc.tilted_product_state(np.pi / 2, n))
    thetas = np.asarray(p["thetas"], dtype=float)
    table = {}
    for th in thetas:
        occ = sym.mode_occupancy(nk.pure_state(cc.tilted_product_state(th, n)), action, ref)
        for mu, v in occ.items():
            table.setdefault(mu, []).append(v)
    res = ScenarioResult()
    for mu, vals in table.items():
        res.add(thetas, vals, f"mu={mu:g}", "occupancy")
    asym = [sym.relative_entropy_asymmetry(nk.pure_state(cc.tilted_product_state(th, n)), action) for th in thetas]
    res.add(thetas, asym, "asymmetry", "relative_entropy_asymmetry")
    res.summary = {"occupancy": {f"{mu:g}": v for mu, v in table.items()}, "thetas": thetas.tolist()}
    return res


# classical Z4 symmetry Mpemba


def run_z4_classical(p, ctx):
    gen = cl.build_z4_generator(p["eps"])
    group = cl.cyclic_group(4)
    t = _grid(p)
    res = ScenarioResult()
    trs = {}
    for label in ("p1", "p2"):
        p0 = cl.as_probability(p[label])
        vals = [cl.classical_asymmetry(q, group) for q in cl.evolve_classical_grid(gen, p0, t)]
        trs[label] = res.add(t, vals, label, "asymmetry")
    res.cross(trs["p2"], trs["p1"])
    spec = gen.spectrum
    for k, w in enumerate(spec.eigenvalues):
        comps = cl.z4_mode_components(spec.right[:, k])
        res.add_spectrum(w, f"mu={max(comps, key=lambda m: np.linalg.norm(comps[m]))}")
    res.summary = {
        "initial_asymmetry": {k: float(v.values[0]) for k, v in trs.items()},
        "fitted_rate": {k: _fit_rate(t, v.values, p["fit_window"]) for k, v in trs.items()},
    }
    return res


# quantum Z4 symmetry Mpemba


def _hermitian_direction(mode, d):
    m = nk.unvec(mode, d)
    h = m + m.conj().T
    return h / nk.trace_norm(h)


def _positivity_limit(rho, direction, iters=60):
    lo, hi = 0.0, 10.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.linalg.eigvalsh(rho + mid * direction).min() > 0:
            lo = mid
        else:
            hi = mid
    return lo


def run_z4_quantum(p, ctx):
    spec = lb.model_spectrum(lb.z4_quantum_model(p["J"], p["eps"]))
    action = sym.ZNAction(sym.shift_operator(4), 4)
    modes = sym.sector_modes(spec.generator, action)
    pi = spec.steady_state
    # slowest mu=1 mode (with its mu=3 conjugate) and fastest mu=2 mode
    h1 = _hermitian_direction(modes[1][1][:, 0], 4)
    h2 = _hermitian_direction(modes[2][1][:, -1], 4)
    rho1 = pi + p["weight_1"] * _positivity_limit(pi, h1) * h1
    rho2 = pi + p["weight_2"] * _positivity_limit(pi, h2) * h2
    t = _grid(p)
    res = ScenarioResult()
    trs = {}
    for label, rho in (("rho1", rho1), ("rho2", rho2)):
        states = lb.evolve_density_grid(spec, rho, t)
        trs[label] = res.add(t, [sym.relative_entropy_asymmetry(r, action) for r in states], label,
                             "relative_entropy_asymmetry")
        norms = [action.modes(r).trace_norms() for r in states]
        for mu in sorted(norms[0]):
            res.add(t, [n[mu] for n in norms], label, "sector_norm", f"mu={mu:g}")
    res.cross(trs["rho2"], trs["rho1"])
    for mu, (w, _) in modes.items():
        res.add_spectrum(w, f"mu={mu:g}")
    res.summary = {"initial_asymmetry": {k: float(v.values[0]) for k, v in trs.items()}}
    return res


# time-translation asymmetry in a Davies-thermalizing Ising chain


def _davies_pair(p, ctx, gamma, beta_e):
    h = lb.tfim_hamiltonian(p["n_spins"], p["J"], p["h"])
    spec = lb.model_spectrum(lb.davies_generator(h, beta_e))
    rng = np.random.default_rng(np.random.SeedSequence(ctx.seed).spawn(1)[0])
    rho1 = noisy_thermal_state(h, p["beta_i"], gamma, rng)
    cfg = op.MetropolisConfig(slow_mode_count=p["slow_modes"], iterations=p["iterations"], seed=ctx.seed,
                              restarts=p["restarts"], threads=ctx.threads)
    rho2, _, history = op.metropolis_rotate(spec, rho1, cfg)
    return h, spec, rho1, rho2, history


def run_davies_symmetry(p, ctx):
    h, spec, rho1, rho2, history = _davies_pair(p, ctx, p["gamma"], p["beta_e"])
    action = sym.TimeTranslationAction(h)
    t = _grid(p)
    states = {"rho1": lb.evolve_density_grid(spec, rho1, t), "rho2": lb.evolve_density_grid(spec, rho2, t)}
    res = ScenarioResult()
    _divergence_family(res, t, {"rho2": states["rho2"], "rho1": states["rho1"]}, action.twirl, "asymmetry")
    _abelian_sector_spectrum(res, spec.generator, action)
    res.summary = {"final_cost": history[-1],
                   "crossing_times_alpha": {c.tag: c.crossing_times for c in res.crossings}}
    return res


# relative-entropy splitting for the Davies chain


def run_splitting(p, ctx):
    res = ScenarioResult()
    worst = 0.0
    t = _grid(p)
    for gamma in p["gammas"]:
        h, spec, rho1, rho2, _ = _davies_pair(p, ctx, float(gamma), p["beta_e"])
        action = sym.TimeTranslationAction(h)
        pi = spec.steady_state
        tag = f"gamma={float(gamma):g}"
        trs = {}
        for label, rho in (("rho2", rho2), ("rho1", rho1)):
            parts = {"total": [], "asymmetry": [], "symmetric_athermality": []}
            for r in lb.evolve_density_grid(spec, rho, t):
                asym, symm = mo.entropy_splitting(r, pi, action)
                total = mo.quantum_relative_entropy(r, pi)
                worst = max(worst, abs(total - asym - symm))
                parts["total"].append(total)
                parts["asymmetry"].append(asym)
                parts["symmetric_athermality"].append(symm)
            for name, vals in parts.items():
                trs[label, name] = res.add(t, vals, label, name, tag)
        for name in ("total", "asymmetry", "symmetric_athermality"):
            res.cross(trs["rho2", name], trs["rho1", name])
    res.summary = {"max_splitting_residual": worst}
    return res


# U(1) circuits with the environment reset every period


def _slowest_by_abs_mu(sectors):
    out = {}
    for mu, w in sectors.items():
        mags = np.sort(np.abs(w))[::-1]
        if mu == 0:
            mags = mags[1:]
        if len(mags):
            out[abs(mu)] = max(out.get(abs(mu), 0.0), float(mags[0]))
    return out


def run_u1_markov(p, ctx):
    spec = cc.CircuitSpec(n_s=p["n_s"], n_e=p["n_e"])
    action = sym.U1Action(nk.collective_spin(p["n_s"])[2])
    states = {f"b={int(b)},theta={th:.6g}": nk.pure_state(cc.block_tilted_state(th, int(b), p["n_s"]))
              for b, th in p["states"]}
    steps = p["steps"]

    def realization(arg):
        r, seed = arg
        ch = cc.markov_channel(spec, np.random.default_rng(seed))
        sectors = sym.sector_spectrum(ch, action)
        trajs = {}
        for label, rho in states.items():
            vals = []
            for _ in range(steps + 1):
                vals.append(sym.relative_entropy_asymmetry(rho, action, check=False))
                rho = nk.apply_superop(ch, rho)
            trajs[label] = np.array(vals)
        return r, sectors, trajs

    out = sorted(ctx.map(realization, enumerate(ctx.sub_seeds())), key=lambda x: x[0])
    res = ScenarioResult()
    slow = {}
    for r, sectors, _ in out:
        for mu, w in sectors.items():
            res.add_spectrum(w, f"mu={mu:g}", r)
        for m, v in _slowest_by_abs_mu(sectors).items():
            slow.setdefault(m, []).append(v)
    t = np.arange(steps + 1, dtype=float)
    trs = {label: res.add(t, np.mean([o[2][label] for o in out], axis=0), label, "relative_entropy_asymmetry",
                          seed=ctx.seed) for label in states}
    for a, b in itertools.combinations(list(trs.values()), 2):
        res.cross(a, b)
    support = {}
    for (b, th), label in zip(p["states"], states):
        comps = action.modes(states[label]).trace_norms()
        support[label] = max((v for mu, v in comps.items() if round(mu) % int(b)), default=0.0)
    res.summary = {
        "mean_slowest_modulus": {str(m): float(np.mean(v)) for m, v in sorted(slow.items())},
        "off_support_norm": support,
    }
    return res


# non-Markovian circuits with the environment kept coherent


def _nonmarkov(p, ctx, symmetry):
    n_s, n_e = p["n_s"], p["n_e"]
    spec = cc.CircuitSpec(n_s=n_s, n_e=n_e, symmetry=symmetry)
    if symmetry == "U1":
        action = sym.U1Action(nk.collective_spin(n_s)[2])
        env = cc.zero_state(n_e)
        prepare = lambda th: cc.tilted_product_state(th, n_s)
    else:
        action = sym.SU2Action(*nk.collective_spin(n_s))
        env = cc.singlet_product(n_e)
        prepare = lambda th: cc.su2_tilted_state(th, n_s)
    thetas = [float(x) for x in p["thetas"]]
    steps = p["steps"]
    n = n_s + n_e

    def realization(arg):
        r, seed = arg
        rng = np.random.default_rng(seed)
        if p["floquet"]:
            circuits = [cc.brickwork_step(spec, rng)] * steps
        else:
            circuits = [cc.brickwork_step(spec, rng) for _ in range(steps)]
        out = {}
        for th in thetas:
            psi = np.kron(prepare(th), env)
            vals = []
            for k in range(steps + 1):
                if k:
                    psi = circuits[k - 1].apply(psi)
                vals.append(sym.relative_entropy_asymmetry(cc.reduced_state(psi, n_s, n), action, check=False))
            out[th] = np.array(vals)
        return r, out

    out = sorted(ctx.map(realization, enumerate(ctx.sub_seeds())), key=lambda x: x[0])
    res = ScenarioResult()
    t = np.arange(steps + 1, dtype=float)
    trs = {th: res.add(t, np.mean([o[1][th] for o in out], axis=0), f"theta={th:.6g}",
                       "relative_entropy_asymmetry", seed=ctx.seed) for th in thetas}
    for a, b in itertools.combinations(thetas, 2):
        res.cross(trs[a], trs[b])
    res.summary = {"thetas": thetas}
    return res


def run_u1_nonmarkov(p, ctx):
    return _nonmarkov(p, ctx, "U1")


def run_su2(p, ctx):
    return _nonmarkov(p, ctx, "SU2")


# non-stationarity under an all-to-all spin model


def run_alltoall(p, ctx):
    model = lb.all_to_all_model(p["n_s"], p["omega"], p["delta"], p["v"], p["kappa"])
    spec = lb.model_spectrum(model)
    basis = np.eye(model.dim)
    rho1 = nk.pure_state(basis[p["rho1_index"]])
    cfg = op.MetropolisConfig(slow_mode_count=p["slow_modes"], iterations=p["iterations"], seed=ctx.seed,
                              restarts=p["restarts"], threads=ctx.threads)
    rho2, _, history = op.metropolis_rotate(spec, nk.pure_state(basis[p["rho2_index"]]), cfg)
    t = _grid(p)
    res = ScenarioResult()
    trs = {label: res.add(t, [mo.nonstationarity(r, spec.steady_state) for r in lb.evolve_density_grid(spec, rho, t)],
                          label, "nonstationarity")
           for label, rho in (("rho1", rho1), ("rho2", rho2))}
    res.cross(trs["rho2"], trs["rho1"])
    res.add_spectrum(spec.eigenvalues)
    res.summary = {"final_cost": history[-1],
                   "initial_values": {k: float(v.values[0]) for k, v in trs.items()}}
    return res


# thermal Mpemba of one qubit inside an ergodic closed chain


def run_eth(p, ctx):
    prm = cc.ETHParams.from_tuple(p["couplings"], n_env=p["n_env"])
    h = cc.eth_model(prm)
    h_e = cc.environment_hamiltonian(prm)
    spectrum = np.linalg.eigvalsh(h.toarray())
    pi = mo.gibbs_state(prm.h_0 * nk.SZ, p["beta"])
    t = _grid(p)
    states = {}
    selections = {}
    for label, qubit in (("plus", np.array([1.0, 1.0]) / np.sqrt(2)), ("zero", np.array([1.0, 0.0]))):
        psi, sel = cc.eth_initial_state(prm, qubit, p["beta"], h_e, spectrum, p["beta_tol"])
        states[label], _ = cc.eth_evolve(h, psi, t)
        selections[label] = {"env_index": sel.index, "total_energy": sel.total_energy, "beta": sel.beta}
    res = ScenarioResult()
    _divergence_family(res, t, states, lambda r: pi, "athermality")
    res.summary = {"selections": selections}
    return res


# quantum Fisher information family for the Davies qubit


def run_qfi(p, ctx):
    spec = lb.model_spectrum(lb.qubit_davies(p["h"], p["beta"]))
    coherent = _bloch_state(p["bloch"])
    incoherent = _bloch_state([0.0, 0.0, float(np.linalg.norm(p["bloch"]))])
    t = _grid(p)
    states = {"coherent": lb.evolve_density_grid(spec, coherent, t),
              "incoherent": lb.evolve_density_grid(spec, incoherent, t)}
    res = ScenarioResult()
    for f in mo.QFI_FUNCTIONS:
        trs = [res.add(t, [mo.qfi(r, lb.time_derivative(spec, r), f) for r in s], label, "qfi", f"f={f}")
               for label, s in states.items()]
        res.cross(*trs)
    res.summary = {"crossings": {c.tag: c.crossing_times for c in res.crossings}}
    return res


_PI = np.pi

SCENARIOS = {
    s.name: s
    for s in [
        ScenarioInfo("fig-classical-kl", "classical Ising chain, KL athermality",
                     "Thermal vs Metropolis-permuted initial distribution under detailed-balance dynamics.",
                     dict(n_spins=7, J=-0.4, h=0.2, beta_e=1.0, beta_i=0.5, rates="arrhenius", slow_modes=2,
                          iterations=20000, restarts=1, t_max=14.0, n_times=701, fit_optimized=[4.0, 8.0],
                          fit_thermal=[6.0, 12.0]),
                     True, run_classical_kl),
        ScenarioInfo("fig-davies-thermal", "Davies qubit, free-energy athermality and Renyi crossing times",
                     "Random Bloch vector vs its Metropolis-rotated partner.",
                     dict(h=10.0, beta=0.1, bloch=[0.221, 0.867, 0.206], slow_modes=2, iterations=3000, restarts=1,
                          t_max=8.0, n_times=2001),
                     True, run_davies_thermal),
        ScenarioInfo("fig-modes", "U(1) mode occupancy of tilted three-qubit states",
                     "Rescaled trace norm of each charge-difference mode against the x-aligned state.",
                     dict(n_qubits=3, thetas=[k * _PI / 12 for k in range(7)]),
                     False, run_modes),
        ScenarioInfo("fig-z4-classical", "classical Z4 ring, symmetry Mpemba",
                     "Two ring distributions with asymmetry in different Fourier sectors.",
                     dict(eps=0.25, p1=[0.5, 0.25, 0.0, 0.25], p2=[0.5, 0.0, 0.5, 0.0], t_max=1.5, n_times=1501,
                          fit_window=[1.0, 1.5]),
                     True, run_z4_classical),
        ScenarioInfo("fig-z4-quantum", "quantum Z4 ring, asymmetry and sector norms",
                     "Steady state perturbed along the slowest mu=1 mode vs the fastest mu=2 mode.",
                     dict(J=1.0, eps=0.25, weight_1=0.5, weight_2=0.9, t_max=3.0, n_times=601),
                     True, run_z4_quantum),
        ScenarioInfo("fig-davies-symmetry", "Davies Ising chain, time-translation asymmetry",
                     "Noisy thermal state vs its Metropolis-rotated partner, Renyi asymmetry family.",
                     dict(n_spins=4, J=1.0, h=1.0, beta_e=0.1, beta_i=1.0, gamma=0.05, slow_modes=6, iterations=6000,
                          restarts=1, t_max=0.5, n_times=801),
                     True, run_davies_symmetry),
        ScenarioInfo("fig-u1-markov", "Markovian U(1) circuits, block-tilted states",
                     "Environment reset each period; sector-resolved slowest eigenvalues and asymmetry.",
                     dict(n_s=4, n_e=2, states=[[1, _PI / 6], [2, _PI], [3, 2 * _PI]], steps=120),
                     True, run_u1_markov, realizations=100),
        ScenarioInfo("fig-u1-nonmarkov", "non-Markovian U(1) circuits, tilted ferromagnets",
                     "Joint statevector evolution with a coherent environment in |0...0>.",
                     dict(n_s=4, n_e=6, thetas=[0.0, _PI / 6, _PI / 4, _PI / 2], steps=400, floquet=False),
                     False, run_u1_nonmarkov, realizations=20),
        ScenarioInfo("fig-su2", "non-Markovian SU(2) circuits, singlet/ferromagnet superpositions",
                     "Joint statevector evolution with a singlet environment.",
                     dict(n_s=4, n_e=6, thetas=[0.0, _PI / 8, _PI / 4, _PI / 2, 3 * _PI / 4, _PI], steps=200,
                          floquet=False),
                     False, run_su2, realizations=20),
        ScenarioInfo("fig-splitting", "Davies Ising chain, athermality split into asymmetry and symmetric parts",
                     "Weak and strong noise; crossings of each part of the splitting.",
                     dict(n_spins=4, J=1.0, h=1.0, beta_e=2.0, beta_i=1.0, gammas=[0.05, 0.25], slow_modes=1,
                          iterations=3000, restarts=1, t_max=20.0, n_times=801),
                     True, run_splitting),
        ScenarioInfo("fig-alltoall", "all-to-all spin model, non-stationarity",
                     "Lowest Dicke state vs Metropolis-rotated highest Dicke state.",
                     dict(n_s=5, omega=1.0, delta=-1.0, v=3.0, kappa=0.01, rho1_index=5, rho2_index=0, slow_modes=1,
                          iterations=4000, restarts=1, t_max=1000.0, n_times=501),
                     True, run_alltoall),
        ScenarioInfo("fig-eth", "ETH chain, athermality of one qubit",
                     "|+> and |0> qubits with energy-matched environment eigenstates.",
                     dict(n_env=11, couplings=[1.0, 0.3, 1.1, 0.25, -0.25, 0.15, 1.525], beta=-0.46, beta_tol=0.05,
                          t_max=600.0, n_times=121),
                     False, run_eth),
        ScenarioInfo("fig-qfi", "Davies qubit, QFI family",
                     "Coherent vs incoherent state of equal purity; SLD, WY and HM Fisher information.",
                     dict(h=5.0, beta=0.1, bloch=[0.75, 0.0, 0.19], t_max=2.0, n_times=2001),
                     True, run_qfi),
    ]
}


def check_monotone(res: ScenarioResult, tol=MONOTONE_TOL):
    """Raise if any emitted trajectory increases by more than ``tol`` (relative to its scale)."""
    for rec in res.records:
        tr = rec.trajectory
        scale = max(1.0, float(np.abs(tr.values).max(initial=0.0)))
        if tr.max_increase() > tol * scale:
            raise MonotonicityError(
                f"{tr.label}/{tr.monotone}/{tr.tag} increases by {tr.max_increase():.3e}")


def run_scenario(name, overrides=None, ctx=None):
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}")
    info = SCENARIOS[name]
    ctx = ctx or Context(realizations=info.realizations)
    if ctx.realizations < 1:
        raise ConfigError("realizations must be at least 1")
    params = info.resolve(overrides)
    res = info.runner(params, ctx)
    if info.markovian:
        check_monotone(res)
    return params, res
