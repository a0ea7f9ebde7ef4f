"""Named experiments built from the library modules.

Each ``run_*`` function takes a merged config dict and returns a
:class:`RunResult` holding the files to write (name -> text), summary metrics
and a few human-readable summary lines.  Nothing here touches the filesystem
except reading an optional design file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dynamics, io, photonics, tomography
from .errors import InvalidArgumentError
from .lattice import ArrayDesign, design_array

QPT_ORDER = ("H", "V", "D", "R")


@dataclass
class RunResult:
    files: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, dict[str, float | None]] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)

    def metric(self, name: str, value: float, std: float | None = None) -> None:
        self.metrics[name] = {"value": float(value), "std": None if std is None else float(std)}


def unit(x: float) -> float:
    """Clip round-off excursions of a probability-like value into [0, 1]."""
    return tomography._clamp(float(x), "probability")


def derive_seed(seed: int, *tags: int) -> int:
    """Independent, reproducible sub-seed for one measurement stream."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(tags))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# -- device ----------------------------------------------------------------


@dataclass(frozen=True)
class Device:
    design: ArrayDesign
    hamiltonian: dynamics.Hamiltonian
    length_mm: float
    amplitude: float
    phase_rad: float
    coherence: float

    @property
    def n_sites(self) -> int:
        return self.design.n_sites

    def mirror(self, site: int) -> int:
        return self.n_sites + 1 - site

    def propagator(self) -> np.ndarray:
        return dynamics.propagator(self.hamiltonian, self.length_mm)

    def polarization_channel(self, rho: np.ndarray, which_photon: int = 1) -> np.ndarray:
        """Output-side polarization phase and dephasing of the array, for 2x2 or 4x4 states."""
        jones = photonics.phase_plate(self.phase_rad)
        if rho.shape == (2, 2):
            out = jones @ rho @ jones.conj().T
            mask = np.array([[1.0, self.coherence], [self.coherence, 1.0]])
            return out * mask
        st = photonics.apply_polarization_unitary(photonics.TwoPhotonState(rho), jones, which_photon)
        return photonics.dephase(st, self.coherence, which_photon).data


def build_design(cfg: dict[str, Any]) -> ArrayDesign:
    if cfg.get("design_file"):
        design = io.load_design(cfg["design_file"])
    else:
        d = cfg["design"]
        if cfg["model"]["spectrum"] == "uniform":
            return ArrayDesign(
                n_sites=d["n_sites"],
                d_min=d["d_min_um"],
                decay_a=d["decay_a_per_mm"],
                decay_b=d["decay_b_per_um"],
                spacings=(float(d["d_min_um"]),) * (d["n_sites"] - 1),
            )
        return design_array(d["n_sites"], d["d_min_um"], d["decay_a_per_mm"], d["decay_b_per_um"])
    if cfg["model"]["spectrum"] == "uniform":
        design = ArrayDesign(
            design.n_sites, design.d_min, design.decay_a, design.decay_b, (design.d_min,) * (design.n_sites - 1)
        )
    return design


def build_device(cfg: dict[str, Any]) -> Device:
    design = build_design(cfg)
    m = cfg["model"]
    bire = None
    if m["birefringence"] is not None:
        bire = (m["birefringence"]["a_per_mm"], m["birefringence"]["b_per_um"])
    if m["coupling"] == "full":
        h = dynamics.build_full_hamiltonian(design, 2, bire)
    else:
        h = dynamics.build_design_nn_hamiltonian(design, 2, bire)
    length = m["length_mm"] if m["length_mm"] is not None else design.z_pst()
    amp = dynamics.attenuation(length, m["loss_db_per_cm"]) if m["loss"] else 1.0
    return Device(design, h, length, amp, math.radians(m["device_phase_deg"]), m["device_coherence"])


def _check_inputs(device: Device, inputs) -> None:
    for s in inputs:
        if not 1 <= s <= device.n_sites:
            raise InvalidArgumentError(f"input site {s} outside 1..{device.n_sites}")


# -- design / propagation / classical characterisation ---------------------


def run_design(cfg: dict[str, Any]) -> RunResult:
    design = build_design(cfg)
    res = RunResult()
    res.files["design.json"] = io.dumps(design.to_dict())
    spectrum = design.couplings()
    res.metric("z_pst_mm", design.z_pst())
    res.metric("c_max_per_mm", design.c_max)
    res.metric("c0_per_mm", design.c0)
    res.summary.append(f"N = {design.n_sites}, d_min = {design.d_min:g} um, z_PST = {design.z_pst():.4f} mm")
    res.summary.append("spacings_um: " + ", ".join(f"{d:.4f}" for d in design.spacings))
    res.summary.append("couplings_per_mm: " + ", ".join(f"{c:.5f}" for c in spectrum.couplings))
    return res


def run_propagate(cfg: dict[str, Any]) -> RunResult:
    device = build_device(cfg)
    p = cfg["propagation"]
    s = p["input_site"]
    _check_inputs(device, [s])
    t = device.mirror(s)
    z_max = p["z_max_mm"] if p["z_max_mm"] is not None else device.length_mm
    loss = cfg["model"]["loss_db_per_cm"] if cfg["model"]["loss"] else 0.0
    profile = dynamics.propagation_profile(device.hamiltonian, z_max, p["n_steps"], s, loss_db_per_cm=loss)
    z_star, p_star = dynamics.first_peak_max(device.hamiltonian, s, t)
    final = profile.intensities[-1]
    res = RunResult()
    res.files["profile.csv"] = io.profile_to_csv(profile)
    if p["ppm"]:
        res.files["profile.pgm"] = io.profile_to_pgm(profile)
    summary = {
        "input_site": s,
        "target_site": t,
        "z_max_mm": float(z_max),
        "n_steps": p["n_steps"],
        "z_pst_mm": float(device.design.z_pst()),
        "final_row_peak_site": int(np.argmax(final)) + 1,
        "final_row_target_probability": unit(final[t - 1]),
        "first_peak": {"z_mm": z_star, "probability": unit(p_star)},
    }
    res.files["propagation.json"] = io.dumps(summary)
    res.metric("first_peak_probability", p_star)
    res.metric("final_target_probability", final[t - 1])
    res.summary.append(f"input {s} -> {t}: first-peak max P = {p_star:.6f} at z = {z_star:.4f} mm")
    res.summary.append(f"final row (z = {z_max:.4f} mm): P({t}) = {final[t - 1]:.12f}, peak at site {summary['final_row_peak_site']}")
    return res


def run_transfer_table(cfg: dict[str, Any]) -> RunResult:
    device = build_device(cfg)
    inputs = cfg["source"]["inputs"]
    _check_inputs(device, inputs)
    u = device.propagator()
    n = device.n_sites
    rows = []
    res = RunResult()
    for s in inputs:
        t = device.mirror(s)
        raw_h = np.abs(u[:n, s - 1]) ** 2
        raw_v = np.abs(u[n:, n + s - 1]) ** 2
        f = tomography.distribution_fidelity(raw_h, raw_v)
        loss = device.amplitude**2
        rows.append(
            {
                "input": s,
                "output": t,
                "distribution_H": [unit(x) for x in raw_h / raw_h.sum()],
                "distribution_V": [unit(x) for x in raw_v / raw_v.sum()],
                "distribution_fidelity": f,
                "designed_site_probability_H": unit(loss * raw_h[t - 1]),
                "designed_site_probability_V": unit(loss * raw_v[t - 1]),
            }
        )
        res.metric(f"transfer_{s}_{t}.distribution_fidelity", f)
        res.metric(f"transfer_{s}_{t}.designed_site_probability_H", loss * raw_h[t - 1])
        res.summary.append(f"{s:>2} -> {t:<2}  P_H = {loss * raw_h[t - 1]:.6f}  P_V = {loss * raw_v[t - 1]:.6f}  F_dist = {f:.6f}")
    doc = {"model": cfg["model"]["coupling"], "length_mm": float(device.length_mm), "transfers": rows}
    res.files["transfer_table.json"] = io.dumps(doc)
    return res


# -- process tomography -----------------------------------------------------


@dataclass
class QptResult:
    site: int
    target: int
    chi: np.ndarray
    records: list[list[tomography.MeasurementRecord]]
    weights: list[float]
    compensation: tomography.CompensationSetting
    fidelity_raw: float
    fidelity_comp: float
    fidelity_comp_std: float | None


def _process_from_records(records, inputs) -> np.ndarray:
    outputs = [tomography.reconstruct_state(r, 2) for r in records]
    w = np.array([tomography.record_intensity(r, 2) for r in records])
    w = w / (0.5 * (w[0] + w[1]))
    return tomography.reconstruct_process(inputs, outputs, w)


def simulate_qpt(cfg: dict[str, Any], device: Device, u: np.ndarray, site: int) -> QptResult:
    meas = cfg["measurement"]
    t = device.mirror(site)
    proj = tomography.projector_set(1)
    inputs = tomography.standard_inputs()
    kets = {"H": photonics.H, "V": photonics.V, "D": (photonics.H + photonics.V) / math.sqrt(2),
            "R": (photonics.H + 1j * photonics.V) / math.sqrt(2)}
    records = []
    for k, label in enumerate(QPT_ORDER):
        psi = u @ photonics.single_photon_state(kets[label], site, device.n_sites)
        sigma, p = photonics.postselect_single(psi, t, device.n_sites)
        sigma = device.polarization_channel(sigma) * (p * device.amplitude**2)
        seed = derive_seed(meas["seed"], 1, site, k)
        records.append(tomography.simulate_counts(sigma, proj, meas["shots"], seed, meas["dark_rate"]))
    in_list = [inputs[label] for label in QPT_ORDER]
    chi = _process_from_records(records, in_list)
    chi_id = tomography.chi_from_unitary(np.eye(2))
    f_raw = tomography.process_fidelity(chi_id, chi)
    setting, f_comp = tomography.fit_compensation(chi)
    std = None
    if meas["shots"] > 0 and meas["bootstrap_resamples"] > 1:
        def stat(rs):
            return tomography.process_fidelity(chi_id, tomography.compensated_chi(_process_from_records(rs, in_list), setting))

        std = tomography.bootstrap_std(records, stat, meas["bootstrap_resamples"], derive_seed(meas["seed"], 11, site))
    w = [tomography.record_intensity(r, 2) for r in records]
    return QptResult(site, t, chi, records, w, setting, f_raw, f_comp, std)


def run_qpt(cfg: dict[str, Any]) -> RunResult:
    device = build_device(cfg)
    inputs = cfg["source"]["inputs"]
    _check_inputs(device, inputs)
    u = device.propagator()
    res = RunResult()
    rows = []
    for s in inputs:
        q = simulate_qpt(cfg, device, u, s)
        rows.append(
            {
                "input": s,
                "output": q.target,
                "chi": io.chi_to_json(q.chi),
                "compensation": {"hwp_deg": q.compensation.hwp_deg, "phase_deg": q.compensation.phase_deg},
                "fidelity_uncompensated": q.fidelity_raw,
                "fidelity_compensated": q.fidelity_comp,
                "fidelity_compensated_std": q.fidelity_comp_std,
            }
        )
        key = f"transfer_{s}_{q.target}"
        res.metric(f"{key}.process_fidelity_uncompensated", q.fidelity_raw)
        res.metric(f"{key}.process_fidelity", q.fidelity_comp, q.fidelity_comp_std)
        if cfg["measurement"]["shots"] > 0:
            for label, recs in zip(QPT_ORDER, q.records):
                res.files[f"qpt_{s}_{label}.csv"] = io.records_to_csv(recs)
        res.summary.append(
            f"{s:>2} -> {q.target:<2}  HWP = {q.compensation.hwp_deg:8.3f} deg  phase = {q.compensation.phase_deg:8.3f} deg  "
            f"F_process = {q.fidelity_raw:.6f} -> {q.fidelity_comp:.6f}"
        )
    res.files["qpt.json"] = io.dumps({"model": cfg["model"]["coupling"], "length_mm": float(device.length_mm), "transfers": rows})
    return res


# -- entangled transfers ----------------------------------------------------


def _source_state(cfg: dict[str, Any], delay_um: float = 0.0) -> photonics.TwoPhotonState:
    src = cfg["source"]
    state = photonics.prepare_bell(math.radians(src["residual_phase_deg"]), math.radians(src["hwp_deg"]))
    if delay_um:
        w = photonics.Wavepacket(src["coherence_length_um"], delay_um)
        state = photonics.apply_delay_decoherence(state, w, which_photon=1)
    return state


def entangled_transfer(
    cfg: dict[str, Any],
    device: Device,
    u: np.ndarray,
    qpt: QptResult,
    source: photonics.TwoPhotonState,
    seed_tags: tuple[int, ...],
) -> dict[str, Any]:
    """Send photon 1 of ``source`` through the array and compare with the reference path."""
    meas = cfg["measurement"]
    site, t = qpt.site, qpt.target
    comp = np.eye(2, dtype=complex)
    if cfg["source"]["compensate"]:
        comp = photonics.compensation_unitary(math.radians(qpt.compensation.hwp_deg), math.radians(qpt.compensation.phase_deg))
    launched = photonics.apply_polarization_unitary(source, comp, 1)
    evolved = photonics.evolve_two_photon(photonics.inject(launched, site, device.n_sites), u)
    rho, p = photonics.postselect_site(evolved, t)
    rho = device.polarization_channel(rho, 1) * (p * device.amplitude**2)
    ref = source.density_matrix()

    proj = tomography.projector_set(2)
    rec_pst = tomography.simulate_counts(rho, proj, meas["shots"], derive_seed(meas["seed"], *seed_tags, 0), meas["dark_rate"])
    rec_ref = tomography.simulate_counts(ref, proj, meas["shots"], derive_seed(meas["seed"], *seed_tags, 1), meas["dark_rate"])

    def evaluate(rs):
        m_pst = tomography.reconstruct_state(rs[0], 4)
        m_ref = tomography.reconstruct_state(rs[1], 4)
        c1 = np.kron(comp, np.eye(2))
        pred = tomography.apply_chi(qpt.chi, c1 @ m_ref @ c1.conj().T, which_qubit=1)
        pred = pred / np.real(np.trace(pred))
        return m_pst, m_ref, pred

    m_pst, m_ref, pred = evaluate([rec_pst, rec_ref])
    f = tomography.state_fidelity(m_pst, m_ref)
    sim = tomography.similarity(m_pst, pred)
    f_std = sim_std = None
    if meas["shots"] > 0 and meas["bootstrap_resamples"] > 1:
        boot_seed = derive_seed(meas["seed"], *seed_tags, 2)
        f_std = tomography.bootstrap_std(
            [rec_pst, rec_ref], lambda rs: tomography.state_fidelity(*evaluate(rs)[:2]), meas["bootstrap_resamples"], boot_seed
        )

        def sim_stat(rs):
            a, _, b = evaluate(rs)
            return tomography.similarity(a, b)

        sim_std = tomography.bootstrap_std([rec_pst, rec_ref], sim_stat, meas["bootstrap_resamples"], boot_seed)
    return {
        "input": site,
        "output": t,
        "success_probability": unit(p),
        "rho_transferred": io.density_to_json(m_pst),
        "rho_reference": io.density_to_json(m_ref),
        "rho_predicted": io.density_to_json(pred),
        "fidelity": f,
        "fidelity_std": f_std,
        "similarity": sim,
        "similarity_std": sim_std,
        "purity": min(tomography.purity(m_pst), 1.0),
        "_records": (rec_pst, rec_ref),
    }


def _emit_records(res: RunResult, cfg, prefix: str, row: dict[str, Any]) -> None:
    rec_pst, rec_ref = row.pop("_records")
    if cfg["measurement"]["shots"] > 0:
        res.files[f"{prefix}_transferred.csv"] = io.records_to_csv(rec_pst)
        res.files[f"{prefix}_reference.csv"] = io.records_to_csv(rec_ref)


def run_bell(cfg: dict[str, Any]) -> RunResult:
    device = build_device(cfg)
    inputs = cfg["source"]["inputs"]
    _check_inputs(device, inputs)
    u = device.propagator()
    source = _source_state(cfg)
    res = RunResult()
    rows = []
    for s in inputs:
        q = simulate_qpt(cfg, device, u, s)
        row = entangled_transfer(cfg, device, u, q, source, (2, s))
        _emit_records(res, cfg, f"bell_{s}", row)
        rows.append(row)
        key = f"transfer_{s}_{q.target}"
        res.metric(f"{key}.fidelity", row["fidelity"], row["fidelity_std"])
        res.metric(f"{key}.similarity", row["similarity"], row["similarity_std"])
        res.metric(f"{key}.success_probability", row["success_probability"])
        res.summary.append(f"{s:>2} -> {q.target:<2}  F_quantum = {row['fidelity']:.6f}  similarity = {row['similarity']:.6f}")
    res.files["bell.json"] = io.dumps({"model": cfg["model"]["coupling"], "length_mm": float(device.length_mm), "transfers": rows})
    return res


def run_decohere(cfg: dict[str, Any]) -> RunResult:
    device = build_device(cfg)
    s = cfg["source"]["inputs"][0]
    _check_inputs(device, [s])
    u = device.propagator()
    q = simulate_qpt(cfg, device, u, s)
    res = RunResult()
    rows = []
    for k, tau in enumerate(cfg["source"]["delays_um"]):
        source = _source_state(cfg, tau)
        gamma = photonics.wavepacket_overlap(photonics.Wavepacket(cfg["source"]["coherence_length_um"], tau))
        row = entangled_transfer(cfg, device, u, q, source, (3, s, k))
        _emit_records(res, cfg, f"decohere_{k}", row)
        row = {"delay_um": float(tau), "overlap": gamma, **row}
        rows.append(row)
        res.metric(f"delay_{tau:g}um.purity", row["purity"])
        res.metric(f"delay_{tau:g}um.fidelity", row["fidelity"], row["fidelity_std"])
        res.metric(f"delay_{tau:g}um.similarity", row["similarity"], row["similarity_std"])
        res.summary.append(
            f"delay {tau:6.1f} um  overlap = {gamma:.4f}  purity = {row['purity']:.6f}  "
            f"F = {row['fidelity']:.6f}  similarity = {row['similarity']:.6f}"
        )
    doc = {
        "input": s,
        "output": q.target,
        "coherence_length_um": float(cfg["source"]["coherence_length_um"]),
        "sweep": rows,
    }
    res.files["decohere.json"] = io.dumps(doc)
    return res


COMMANDS = {
    "design": run_design,
    "propagate": run_propagate,
    "transfer-table": run_transfer_table,
    "qpt": run_qpt,
    "bell": run_bell,
    "decohere": run_decohere,
}
