#pragma once

#include <filesystem>
#include <optional>

#include "mcfs/surgery.hpp"

namespace mcfs {

// Full parameter pack of an (alpha, delta, H)-flow run.
struct Params {
  int N = 3;
  double alpha = 0.5;   // Andrews constant, in (0, N-2)
  double beta = 0.1;    // 2-convexity constant, in (0, 1/(N-2))
  double gamma = 0.0;   // initial max-H bound; 0 means "set from initial data"
  double delta = 0.05;  // neck quality
  double H_th = 0.0, H_neck = 0.0, H_trig = 0.0;
  double min_ratio = 10.0;  // floor for H_trig/H_neck and H_neck/H_th
  SurgeryParams surgery;
  StepperConfig stepper;
  double extinction_slack = 1.3;  // termination cap factor over diam^2/(2(N-1))
  bool audit_andrews = true;      // per-snapshot Andrews monitoring
  int snapshot_count = 60;        // regular snapshot budget per run

  void validate() const {
    require(N >= 3, ErrorCode::bad_config, "N must be >= 3");
    require(alpha > 0.0 && alpha < static_cast<double>(N - 2), ErrorCode::bad_config,
            "alpha outside (0, N-2)");
    require(beta > 0.0 && beta < 1.0 / static_cast<double>(N - 2), ErrorCode::bad_config,
            "beta outside (0, 1/(N-2))");
    require(delta > 0.0 && delta < 1.0, ErrorCode::bad_config, "delta outside (0, 1)");
    require(H_trig > H_neck && H_neck > H_th && H_th > 0.0, ErrorCode::bad_config,
            "need H_trig > H_neck > H_th > 0");
    require(H_trig / H_neck >= min_ratio - 1e-12 && H_neck / H_th >= min_ratio - 1e-12,
            ErrorCode::bad_config, "curvature ratios below the configured minimum");
    stepper.validate();
  }

  // Parabolic rescaling: lengths scale by lambda, curvatures by 1/lambda,
  // times by lambda^2.
  Params rescaled(double lambda) const {
    Params p = *this;
    p.gamma = gamma / lambda;
    p.H_th = H_th / lambda;
    p.H_neck = H_neck / lambda;
    p.H_trig = H_trig / lambda;
    p.stepper.spacing = stepper.spacing * lambda;
    p.stepper.min_spacing = stepper.min_spacing * lambda;
    return p;
  }
};

struct ValidationIssue {
  std::string check;
  double value = 0.0;
  double bound = 0.0;
  double at_x = 0.0;
};

struct ValidationReport {
  bool accepted = false;
  bool empty_domain = false;
  double max_H = 0.0, min_H = 0.0;
  double min_two_convexity = 0.0;
  double min_alpha_interior = 0.0, min_alpha_exterior = 0.0;
  std::vector<ValidationIssue> violations;
};

// Checks the controlled-initial-condition inequalities: H > 0,
// two-convexity ratio >= beta, H <= gamma, Andrews constants >= alpha.
inline ValidationReport validate_initial(const Params& params, const ProfileCurve& curve) {
  ValidationReport rep;
  if (curve.empty()) {
    rep.accepted = true;
    rep.empty_domain = true;
    return rep;
  }
  curve.validate();
  CurvatureField f = curvatures(curve);
  rep.max_H = f.max_H();
  rep.min_H = f.min_H();
  double gamma = params.gamma > 0.0 ? params.gamma : rep.max_H * (1.0 + 1e-9);

  rep.min_two_convexity = 1e300;
  size_t worst_ratio = 0, worst_H = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    if (f.two_convexity[i] < rep.min_two_convexity) {
      rep.min_two_convexity = f.two_convexity[i];
      worst_ratio = i;
    }
    if (f.H[i] < f.H[worst_H]) worst_H = i;
  }
  if (rep.min_H <= 0.0)
    rep.violations.push_back({"H > 0", rep.min_H, 0.0, curve.x[worst_H]});
  if (rep.max_H > gamma)
    rep.violations.push_back({"H <= gamma", rep.max_H, gamma, 0.0});
  if (rep.min_H > 0.0) {
    if (rep.min_two_convexity < params.beta)
      rep.violations.push_back(
          {"two_convexity >= beta", rep.min_two_convexity, params.beta, curve.x[worst_ratio]});
    AndrewsReport andrews = andrews_radii(curve, f);
    rep.min_alpha_interior = andrews.min_alpha_interior();
    rep.min_alpha_exterior = andrews.min_alpha_exterior();
    size_t wi = 0, we = 0;
    for (size_t i = 0; i < curve.size(); ++i) {
      if (andrews.alpha_interior[i] < andrews.alpha_interior[wi]) wi = i;
      if (andrews.alpha_exterior[i] < andrews.alpha_exterior[we]) we = i;
    }
    if (rep.min_alpha_interior < params.alpha)
      rep.violations.push_back(
          {"alpha_interior >= alpha", rep.min_alpha_interior, params.alpha, curve.x[wi]});
    if (rep.min_alpha_exterior < params.alpha)
      rep.violations.push_back(
          {"alpha_exterior >= alpha", rep.min_alpha_exterior, params.alpha, curve.x[we]});
  }
  rep.accepted = rep.violations.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Run data model

enum class SnapshotPhase { Regular, PreSurgery, PostSurgery, PostDiscard };

inline const char* phase_name(SnapshotPhase p) {
  switch (p) {
    case SnapshotPhase::Regular: return "regular";
    case SnapshotPhase::PreSurgery: return "pre";
    case SnapshotPhase::PostSurgery: return "sharp";
    case SnapshotPhase::PostDiscard: return "post";
  }
  return "?";
}

struct RunSnapshot {
  double t = 0.0;
  SnapshotPhase phase = SnapshotPhase::Regular;
  std::vector<std::pair<int, ProfileCurve>> components;  // (id, curve)
  double max_H = 0.0;
  double min_alpha_interior = 0.0;   // 0 when the Andrews audit is off
  double min_two_convexity = 0.0;
};

struct TriggerRecord {
  double t = 0.0;
  double max_H = 0.0;
  std::vector<int> components;
};

struct GenealogyEdge {
  int parent = -1;
  int child = -1;
  double t = 0.0;
  std::string kind;  // "surgery" | "initial"
};

struct AbortInfo {
  bool aborted = false;
  std::string code;
  std::string message;
  double t = 0.0;
};

struct FlowRun {
  Params params;
  std::vector<RunSnapshot> snapshots;
  std::vector<SurgeryEvent> surgeries;
  std::vector<DiscardRecord> discards;
  std::vector<TriggerRecord> triggers;
  std::vector<GenealogyEdge> genealogy;
  double extinction_time = -1.0;  // <0 when the run did not reach extinction
  AbortInfo abort;
  double s_sharp = 0.0;  // geometric mean of accepted neck radii

  bool extinct() const { return extinction_time >= 0.0; }
};

struct TopologySummary {
  int balls = 0;
  int solid_tori = 0;
  std::string decomposition;  // e.g. "ball" or "connected sum of 2 solid tori"
};

// Reconstructs the initial domain's decomposition from the discard ledger:
// ball summands act as identities, so the class is decided by the solid tori.
inline TopologySummary topology_report(const FlowRun& run) {
  TopologySummary sum;
  for (const auto& rec : run.discards) {
    if (rec.topo == TopologyClass::Ball)
      ++sum.balls;
    else
      ++sum.solid_tori;
  }
  if (sum.solid_tori == 0)
    sum.decomposition = "ball";
  else if (sum.solid_tori == 1)
    sum.decomposition = "1 solid torus";
  else
    sum.decomposition = "connected sum of " + std::to_string(sum.solid_tori) + " solid tori";
  return sum;
}

namespace detail {

inline void record_run_snapshot(FlowRun& run, const FlowState& state, SnapshotPhase phase,
                                bool audit_andrews) {
  RunSnapshot snap;
  snap.t = state.t;
  snap.phase = phase;
  double mh = -1e300, mta = 1e300, mtc = 1e300;
  for (const auto& comp : state.components) {
    if (comp.status != ComponentStatus::Active) continue;
    snap.components.emplace_back(comp.id, comp.curve);
    CurvatureField f = curvatures(comp.curve);
    mh = std::max(mh, f.max_H());
    for (double v : f.two_convexity) mtc = std::min(mtc, v);
    if (audit_andrews) {
      size_t stride = std::max<size_t>(1, comp.curve.size() / 1200);
      AndrewsReport rep = andrews_radii(comp.curve, f, stride, true);
      mta = std::min(mta, rep.min_alpha_interior());
    }
  }
  snap.max_H = (mh == -1e300) ? 0.0 : mh;
  snap.min_alpha_interior = (mta == 1e300) ? 0.0 : mta;
  snap.min_two_convexity = (mtc == 1e300) ? 0.0 : mtc;
  run.snapshots.push_back(std::move(snap));
}

}  // namespace detail

// Runs the full (alpha, delta, H)-flow: validate, evolve to the trigger,
// detect and cut necks, discard, repeat until extinction. Aborts are
// first-class outcomes carried on the returned run.
inline FlowRun run(const Params& params_in, const ProfileCurve& initial) {
  Params params = params_in;
  FlowRun run_out;

  try {
    if (params.gamma <= 0.0 && !initial.empty())
      params.gamma = curvatures(initial).max_H() * (1.0 + 1e-9);
    params.validate();
    run_out.params = params;

    ValidationReport vr = validate_initial(params, initial);
    require(vr.accepted, ErrorCode::bad_config,
            vr.violations.empty() ? "validation failed"
                                  : "initial condition rejected: " + vr.violations[0].check);
    if (initial.empty()) {
      run_out.extinction_time = 0.0;
      return run_out;
    }

    StandardCapProfile cap = build_standard_cap(params.alpha, params.beta, params.N);
    SurgeryParams sp = params.surgery;
    sp.mu = params.surgery.mu;

    FlowState state;
    Component first;
    first.id = 0;
    first.curve = initial;
    state.components.push_back(std::move(first));
    state.next_id = 1;
    double s_neck = static_cast<double>(params.N - 2) / params.H_neck;
    state.history_span = sp.mu * sq(s_neck) * 1.3;
    run_out.genealogy.push_back({-1, 0, 0.0, "initial"});

    const double diam = initial.diameter();
    const double T_cap =
        params.extinction_slack * sq(diam) / (2.0 * static_cast<double>(params.N - 1));
    // snapshot cadence follows the comparison estimate from the largest radius
    // (the revolved domain sits inside that cylinder), not the loose cap
    const double T_est =
        std::min(T_cap, sq(initial.max_radius()) / (2.0 * static_cast<double>(params.N - 2)));
    const double snap_dt = T_est / static_cast<double>(params.snapshot_count);
    double next_snap = 0.0;

    std::vector<double> accepted_radii;

    detail::record_run_snapshot(run_out, state, SnapshotPhase::Regular, params.audit_andrews);
    next_snap = state.t + snap_dt;

    while (!state.extinct()) {
      // advance to the next trigger, emitting regular snapshots on the way
      TriggerInfo info;
      while (true) {
        double target = std::min(next_snap, T_cap);
        info = advance_until_trigger(state, params.stepper, params.H_trig, target);
        if (info.triggered) break;
        if (state.t >= T_cap - 1e-15)
          fail(ErrorCode::singularity_overrun,
               "run exceeded the comparison-principle extinction cap without becoming extinct");
        detail::record_run_snapshot(run_out, state, SnapshotPhase::Regular, params.audit_andrews);
        next_snap += snap_dt;
      }

      TriggerRecord trig;
      trig.t = info.t;
      trig.max_H = info.max_H;
      for (const auto& [cid, idx] : info.attaining)
        if (trig.components.empty() || trig.components.back() != cid)
          trig.components.push_back(cid);
      run_out.triggers.push_back(trig);

      detail::record_run_snapshot(run_out, state, SnapshotPhase::PreSurgery, params.audit_andrews);

      // surgery on a minimal separating collection of strong necks
      auto candidates = detect_strong_necks(state, params.H_neck, params.delta, sp.mu);
      auto selected = minimal_separating_collection(state, candidates, params.H_trig, params.H_th,
                                                    params.stepper.trigger_tol);
      // the area-drop bound compares K+ against the common pre-surgery domain,
      // so the ball areas of K- are taken before any cut of this trigger time
      std::vector<double> pre_areas;
      for (const auto& neck : selected) {
        const Component* owner = state.find(neck.component_id);
        require(owner != nullptr, ErrorCode::invariant_violation, "selected neck lost its owner");
        SurgeryEvent probe;
        probe.center_x = neck.center_x;
        probe.center_r = owner->curve.r[neck.center_index];
        probe.s = neck.s;
        probe.Gamma = sp.Gamma;
        probe.wrap_period =
            owner->curve.closure == Closure::Periodic ? owner->curve.period : 0.0;
        pre_areas.push_back(event_ball_area_active(state, probe));
      }
      std::vector<SurgeryEvent> events_now;
      for (size_t si = 0; si < selected.size(); ++si) {
        const auto& neck = selected[si];
        SurgeryEvent ev = replace_neck_with_caps(state, neck, cap, sp, params.delta);
        ev.area_before = pre_areas[si];
        run_out.genealogy.push_back({ev.component_id, ev.left_component, state.t, "surgery"});
        if (ev.right_component != ev.left_component)
          run_out.genealogy.push_back({ev.component_id, ev.right_component, state.t, "surgery"});
        accepted_radii.push_back(ev.s);
        events_now.push_back(ev);
        run_out.surgeries.push_back(ev);
      }
      if (!events_now.empty())
        detail::record_run_snapshot(run_out, state, SnapshotPhase::PostSurgery,
                                    params.audit_andrews);

      auto discards = discard_components(state, params.H_th, events_now);
      require(!events_now.empty() || !discards.empty(), ErrorCode::invariant_violation,
              "trigger fired but neither surgery nor discarding occurred");
      // definitive area-drop bound on the post-discard domain
      for (size_t k = 0; k < events_now.size(); ++k) {
        run_out.surgeries[run_out.surgeries.size() - events_now.size() + k].area_after_plus =
            events_now[k].area_after_plus;
        require(events_now[k].area_after_plus <= sp.omega * events_now[k].area_before,
                ErrorCode::surgery_failed,
                "area drop factor violated on the post-discard domain: " +
                    fmt_double(events_now[k].area_after_plus / events_now[k].area_before));
      }
      for (const auto& rec : discards) run_out.discards.push_back(rec);
      detail::record_run_snapshot(run_out, state, SnapshotPhase::PostDiscard,
                                  params.audit_andrews);

      // neck-scale comparability audit (all radii within [mu^-1/2, mu^1/2] s#)
      if (!accepted_radii.empty()) {
        double logsum = 0.0;
        for (double r : accepted_radii) logsum += std::log(r);
        run_out.s_sharp = std::exp(logsum / static_cast<double>(accepted_radii.size()));
        for (double r : accepted_radii)
          require(r >= run_out.s_sharp / std::sqrt(sp.mu) - 1e-12 &&
                      r <= run_out.s_sharp * std::sqrt(sp.mu) + 1e-12,
                  ErrorCode::invariant_violation, "neck radius outside the comparability band");
      }

      if (state.extinct()) {
        run_out.extinction_time = state.t;
        break;
      }
    }
  } catch (const Error& e) {
    run_out.abort.aborted = true;
    run_out.abort.code = error_code_name(e.code());
    run_out.abort.message = e.what();
    run_out.abort.t = run_out.snapshots.empty() ? 0.0 : run_out.snapshots.back().t;
  }
  return run_out;
}

// ---------------------------------------------------------------------------
// Run output directory: events.ndjson, snapshots/, summary.json

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline std::string surgery_event_json(const SurgeryEvent& ev) {
  std::ostringstream os;
  os << "{\"type\":\"surgery\",\"t\":" << fmt_double(ev.time)
     << ",\"component\":" << ev.component_id << ",\"center_x\":" << fmt_double(ev.center_x)
     << ",\"center_r\":" << fmt_double(ev.center_r) << ",\"s\":" << fmt_double(ev.s)
     << ",\"delta_meas\":" << fmt_double(ev.delta_meas) << ",\"Gamma\":" << fmt_double(ev.Gamma)
     << ",\"modified\":[" << fmt_double(ev.modified_lo) << "," << fmt_double(ev.modified_hi)
     << "],\"area_before\":" << fmt_double(ev.area_before)
     << ",\"area_after\":" << fmt_double(ev.area_after)
     << ",\"area_after_plus\":" << fmt_double(ev.area_after_plus)
     << ",\"min_pre_ratio\":" << fmt_double(ev.min_pre_ratio)
     << ",\"min_post_ratio\":" << fmt_double(ev.min_post_ratio)
     << ",\"witness_x\":" << fmt_double(ev.witness_x)
     << ",\"sup_A_scaled\":" << fmt_double(ev.sup_A_scaled)
     << ",\"sup_dA_scaled\":" << fmt_double(ev.sup_dA_scaled)
     << ",\"cap_pair_deviation\":" << fmt_double(ev.cap_pair_deviation)
     << ",\"bend_epsilon\":" << fmt_double(ev.bend_epsilon) << ",\"left\":" << ev.left_component
     << ",\"right\":" << ev.right_component << "}";
  return os.str();
}

inline void save_run(const FlowRun& run, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(dir + "/snapshots");

  std::ofstream events(dir + "/events.ndjson");
  require(events.good(), ErrorCode::io_error, "cannot open events.ndjson");
  for (const auto& trig : run.triggers) {
    events << "{\"type\":\"trigger\",\"t\":" << fmt_double(trig.t)
           << ",\"max_H\":" << fmt_double(trig.max_H) << ",\"components\":[";
    for (size_t i = 0; i < trig.components.size(); ++i)
      events << (i ? "," : "") << trig.components[i];
    events << "]}\n";
  }
  for (const auto& ev : run.surgeries) events << surgery_event_json(ev) << "\n";
  for (const auto& rec : run.discards) {
    events << "{\"type\":\"discard\",\"t\":" << fmt_double(rec.time)
           << ",\"component\":" << rec.component_id << ",\"parent\":" << rec.parent
           << ",\"topology\":\"" << topology_name(rec.topo)
           << "\",\"min_H\":" << fmt_double(rec.min_H) << "}\n";
  }
  if (run.abort.aborted) {
    events << "{\"type\":\"abort\",\"t\":" << fmt_double(run.abort.t) << ",\"code\":\""
           << detail::json_escape(run.abort.code) << "\",\"message\":\""
           << detail::json_escape(run.abort.message) << "\"}\n";
  }

  for (const auto& snap : run.snapshots) {
    for (const auto& [cid, curve] : snap.components) {
      char name[128];
      std::snprintf(name, sizeof(name), "t%.9f_c%d_%s.csv", snap.t, cid, phase_name(snap.phase));
      save_profile_csv(curve, dir + "/snapshots/" + name);
      std::ofstream meta(dir + "/snapshots/" + std::string(name) + ".json");
      meta << profile_meta_json(curve) << "\n";
    }
  }

  TopologySummary topo = topology_report(run);
  std::ofstream summary(dir + "/summary.json");
  require(summary.good(), ErrorCode::io_error, "cannot open summary.json");
  summary << "{\n  \"params\": {\"N\": " << run.params.N
          << ", \"alpha\": " << fmt_double(run.params.alpha)
          << ", \"beta\": " << fmt_double(run.params.beta)
          << ", \"gamma\": " << fmt_double(run.params.gamma)
          << ", \"delta\": " << fmt_double(run.params.delta)
          << ", \"H_th\": " << fmt_double(run.params.H_th)
          << ", \"H_neck\": " << fmt_double(run.params.H_neck)
          << ", \"H_trig\": " << fmt_double(run.params.H_trig)
          << ", \"Gamma\": " << fmt_double(run.params.surgery.Gamma)
          << ", \"omega\": " << fmt_double(run.params.surgery.omega)
          << ", \"mu\": " << fmt_double(run.params.surgery.mu)
          << ", \"spacing\": " << fmt_double(run.params.stepper.spacing)
          << ", \"cfl\": " << fmt_double(run.params.stepper.cfl) << "},\n";
  summary << "  \"extinct\": " << (run.extinct() ? "true" : "false")
          << ",\n  \"extinction_time\": " << fmt_double(run.extinction_time)
          << ",\n  \"surgeries\": " << run.surgeries.size()
          << ",\n  \"discards\": " << run.discards.size()
          << ",\n  \"s_sharp\": " << fmt_double(run.s_sharp) << ",\n  \"ledger\": {\"balls\": "
          << topo.balls << ", \"solid_tori\": " << topo.solid_tori << ", \"decomposition\": \""
          << topo.decomposition << "\"},\n";
  summary << "  \"aborted\": " << (run.abort.aborted ? "true" : "false") << ",\n  \"abort_code\": \""
          << detail::json_escape(run.abort.code) << "\",\n  \"abort_message\": \""
          << detail::json_escape(run.abort.message) << "\",\n";
  // invariant audit: inclusion chain and curvature bounds across snapshots
  double worst_inclusion = 0.0;
  for (size_t k = 1; k < run.snapshots.size(); ++k) {
    const auto& prev = run.snapshots[k - 1];
    const auto& cur = run.snapshots[k];
    if (cur.t < prev.t) continue;
    for (const auto& [cid, curve] : cur.components) {
      double best = 1e300;
      for (const auto& [pid, pcurve] : prev.components)
        best = std::min(best, containment_violation(curve, pcurve));
      if (best < 1e300) worst_inclusion = std::max(worst_inclusion, best);
    }
  }
  double worst_H = 0.0, min_alpha = 1e300, min_tc = 1e300;
  for (const auto& snap : run.snapshots) {
    worst_H = std::max(worst_H, snap.max_H);
    if (snap.min_alpha_interior > 0.0) min_alpha = std::min(min_alpha, snap.min_alpha_interior);
    min_tc = std::min(min_tc, snap.min_two_convexity);
  }
  summary << "  \"audit\": {\"max_H\": " << fmt_double(worst_H)
          << ", \"H_trig_bound\": " << fmt_double(run.params.H_trig *
                                                  (1.0 + run.params.stepper.trigger_tol))
          << ", \"worst_inclusion_violation\": " << fmt_double(worst_inclusion)
          << ", \"min_alpha_interior\": " << fmt_double(min_alpha == 1e300 ? 0.0 : min_alpha)
          << ", \"min_two_convexity\": " << fmt_double(min_tc == 1e300 ? 0.0 : min_tc) << "}\n}\n";
}

}  // namespace mcfs
