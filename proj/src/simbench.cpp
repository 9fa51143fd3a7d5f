#include <multisim/simbench.hpp>

#include <multisim/errors.hpp>
#include <multisim/rng.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace multisim::sim {

namespace {

constexpr double deg2rad = M_PI / 180.0;
constexpr double rad2deg = 180.0 / M_PI;

} // namespace

std::string to_string(DynamicsKind kind)
{
    switch (kind) {
    case DynamicsKind::kinematic_ideal:
        return "kinematic-ideal";
    case DynamicsKind::kinematic_lagged:
        return "kinematic-lagged";
    case DynamicsKind::dynamic_slip:
        return "dynamic-slip";
    }
    return "unknown";
}

DynamicsKind dynamics_from_string(const std::string& name)
{
    for (auto k : {DynamicsKind::kinematic_ideal, DynamicsKind::kinematic_lagged, DynamicsKind::dynamic_slip}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw Error("unknown dynamics kind '" + name + "'");
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::end_of_road:
        return "end-of-road";
    case Termination::xte_cutoff:
        return "xte-cutoff";
    case Termination::step_limit:
        return "step-limit";
    }
    return "unknown";
}

void BackendSpec::check() const
{
    if (id.empty()) {
        throw Error("backend id must not be empty");
    }
    if (!(timestep > 0.0)) {
        throw Error("backend " + id + ": timestep must be > 0");
    }
    if (!(speed > 0.0)) {
        throw Error("backend " + id + ": speed must be > 0");
    }
    if (!(max_steer_deg > 0.0 && max_steer_deg < 90.0)) {
        throw Error("backend " + id + ": max_steer must be in (0, 90)");
    }
    if (actuator_delay_steps < 0) {
        throw Error("backend " + id + ": actuator_delay must be >= 0");
    }
    if (noise_std < 0.0) {
        throw Error("backend " + id + ": noise_std must be >= 0");
    }
    if (!(wheelbase > 0.0)) {
        throw Error("backend " + id + ": wheelbase must be > 0");
    }
    if (steer_rate_limit_deg_s && !(*steer_rate_limit_deg_s > 0.0)) {
        throw Error("backend " + id + ": steer_rate_limit must be > 0 when set");
    }
    if (dynamics == DynamicsKind::dynamic_slip &&
        !(mass > 0.0 && yaw_inertia > 0.0 && cornering_front > 0.0 && cornering_rear > 0.0 && cg_to_front > 0.0 &&
          cg_to_front < wheelbase && substeps > 0)) {
        throw Error("backend " + id + ": invalid single-track parameters");
    }
}

double SimulationTrace::max_abs_xte() const noexcept
{
    double m = 0.0;
    for (double e : xte) {
        m = std::max(m, std::abs(e));
    }
    return m;
}

PathTracker::PathTracker(const road::RoadPath& path) : path_(path)
{
    if (path_.samples.size() < 2) {
        throw InvalidRoad("path needs at least two samples");
    }
}

Projection PathTracker::project_on(std::size_t segment, road::Vec2 p) const
{
    const road::Vec2 a = path_.samples[segment];
    const road::Vec2 b = path_.samples[segment + 1];
    const road::Vec2 ab = b - a;
    const double len2 = road::dot(ab, ab);
    double t = len2 > 0.0 ? road::dot(p - a, ab) / len2 : 0.0;
    const bool first = segment == 0;
    const bool last = segment + 2 == path_.samples.size();
    if (!first) {
        t = std::max(t, 0.0);
    }
    if (!last) {
        t = std::min(t, 1.0);
    }
    const road::Vec2 foot = a + t * ab;
    const double dist = road::norm(p - foot);
    const double side = road::cross(ab, p - a);
    Projection proj;
    proj.segment = segment;
    proj.t = t;
    proj.s = path_.cumulative[segment] + t * std::sqrt(len2);
    proj.xte = side >= 0.0 ? dist : -dist;
    return proj;
}

Projection PathTracker::project(road::Vec2 p)
{
    constexpr std::size_t back = 10;
    constexpr std::size_t ahead = 60;
    const std::size_t last = path_.samples.size() - 2;
    const std::size_t lo = hint_ > back ? hint_ - back : 0;
    const std::size_t hi = std::min(last, hint_ + ahead);

    Projection best = project_on(lo, p);
    for (std::size_t seg = lo + 1; seg <= hi; ++seg) {
        const Projection cand = project_on(seg, p);
        if (std::abs(cand.xte) < std::abs(best.xte)) {
            best = cand;
        }
    }
    hint_ = best.segment;
    return best;
}

road::Vec2 PathTracker::point_at(double s) const
{
    const auto& pts = path_.samples;
    const auto& cum = path_.cumulative;
    if (s <= 0.0) {
        const road::Vec2 d = pts[1] - pts[0];
        return pts[0] + (s / road::norm(d)) * d;
    }
    if (s >= cum.back()) {
        const road::Vec2 d = pts.back() - pts[pts.size() - 2];
        return pts.back() + ((s - cum.back()) / road::norm(d)) * d;
    }
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const auto i = static_cast<std::size_t>(std::distance(cum.begin(), it)) - 1;
    const double seg_len = cum[i + 1] - cum[i];
    const double u = seg_len > 0.0 ? (s - cum[i]) / seg_len : 0.0;
    return pts[i] + u * (pts[i + 1] - pts[i]);
}

bool PathTracker::passed_end(const Projection& proj) const noexcept
{
    return proj.segment + 2 == path_.samples.size() && proj.t >= 1.0;
}

double pure_pursuit_steer(const Pose& pose, road::Vec2 target, double wheelbase)
{
    const double psi = pose.heading_deg * deg2rad;
    const double dx = target.x - pose.x;
    const double dy = target.y - pose.y;
    const double lx = std::cos(psi) * dx + std::sin(psi) * dy;
    const double ly = -std::sin(psi) * dx + std::cos(psi) * dy;
    const double ld = std::hypot(lx, ly);
    if (ld <= 1e-9) {
        return 0.0;
    }
    const double alpha = std::atan2(ly, lx);
    return std::atan(2.0 * wheelbase * std::sin(alpha) / ld);
}

namespace {

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0; // rad
    double vy = 0.0;  // body lateral velocity, dynamic model only
    double r = 0.0;   // yaw rate, dynamic model only
};

void step_kinematic(VehicleState& s, double steer, const BackendSpec& b)
{
    const double v = b.speed;
    const double dt = b.timestep;
    s.x += v * std::cos(s.psi) * dt;
    s.y += v * std::sin(s.psi) * dt;
    s.psi += v / b.wheelbase * std::tan(steer) * dt;
}

void step_single_track(VehicleState& s, double steer, const BackendSpec& b)
{
    const double vx = b.speed;
    const double lf = b.cg_to_front;
    const double lr = b.wheelbase - b.cg_to_front;
    const double h = b.timestep / static_cast<double>(b.substeps);
    for (int k = 0; k < b.substeps; ++k) {
        const double slip_front = steer - (s.vy + lf * s.r) / vx;
        const double slip_rear = -(s.vy - lr * s.r) / vx;
        const double force_front = b.cornering_front * slip_front;
        const double force_rear = b.cornering_rear * slip_rear;
        const double vy_dot = (force_front + force_rear) / b.mass - vx * s.r;
        const double r_dot = (lf * force_front - lr * force_rear) / b.yaw_inertia;
        s.vy += vy_dot * h;
        s.r += r_dot * h;
        s.x += (vx * std::cos(s.psi) - s.vy * std::sin(s.psi)) * h;
        s.y += (vx * std::sin(s.psi) + s.vy * std::cos(s.psi)) * h;
        s.psi += s.r * h;
    }
}

} // namespace

SimulationTrace simulate(const road::RoadPath& path, const BackendSpec& backend, std::uint64_t run_seed,
                         const ControllerConfig& controller)
{
    backend.check();
    PathTracker tracker(path);
    Rng noise(run_seed);

    const road::Vec2 start = path.samples.front();
    const road::Vec2 dir = path.samples[1] - path.samples[0];
    VehicleState state{start.x, start.y, std::atan2(dir.y, dir.x), 0.0, 0.0};

    const double max_steer = backend.max_steer_deg * deg2rad;
    const double dt = backend.timestep;
    const auto max_steps = static_cast<std::size_t>(std::ceil(2.0 * path.arc_length() / (backend.speed * dt))) + 100;

    std::deque<double> pipeline(static_cast<std::size_t>(backend.actuator_delay_steps), 0.0);
    double applied = 0.0;

    SimulationTrace trace;
    trace.cutoff = controller.xte_cutoff;
    for (std::size_t k = 0;; ++k) {
        const Projection proj = tracker.project({state.x, state.y});
        trace.time.push_back(static_cast<double>(k) * dt);
        trace.poses.push_back({state.x, state.y, state.psi * rad2deg});
        trace.xte.push_back(proj.xte);

        if (std::abs(proj.xte) > controller.xte_cutoff) {
            trace.terminated_by = Termination::xte_cutoff;
            break;
        }
        if (tracker.passed_end(proj)) {
            trace.terminated_by = Termination::end_of_road;
            break;
        }
        if (k >= max_steps) {
            trace.terminated_by = Termination::step_limit;
            break;
        }

        Pose sensed{state.x, state.y, state.psi * rad2deg};
        double s_sensed = proj.s;
        if (backend.noise_std > 0.0) {
            const double nx = backend.noise_std * noise.normal();
            const double ny = backend.noise_std * noise.normal();
            sensed.x += nx;
            sensed.y += ny;
            // keep the lookahead anchored to the perceived position
            const road::Vec2 tangent = tracker.point_at(proj.s + 0.5) - tracker.point_at(proj.s - 0.5);
            const double tn = road::norm(tangent);
            if (tn > 0.0) {
                s_sensed += (nx * tangent.x + ny * tangent.y) / tn;
            }
        }
        const road::Vec2 target = tracker.point_at(s_sensed + controller.lookahead);
        const double command = std::clamp(pure_pursuit_steer(sensed, target, backend.wheelbase), -max_steer, max_steer);

        double delayed = command;
        if (!pipeline.empty()) {
            pipeline.push_back(command);
            delayed = pipeline.front();
            pipeline.pop_front();
        }
        if (backend.steer_rate_limit_deg_s) {
            const double max_delta = *backend.steer_rate_limit_deg_s * deg2rad * dt;
            applied += std::clamp(delayed - applied, -max_delta, max_delta);
        } else {
            applied = delayed;
        }

        if (backend.dynamics == DynamicsKind::dynamic_slip) {
            step_single_track(state, applied, backend);
        } else {
            step_kinematic(state, applied, backend);
        }
    }
    return trace;
}

SimulationTrace simulate(const road::RoadGenotype& genotype, const BackendSpec& backend, std::uint64_t run_seed,
                         const road::RoadConfig& road_cfg, const ControllerConfig& controller)
{
    const auto polyline = road::encode(genotype, road_cfg);
    const auto verdict = road::validate(polyline, road_cfg.bounds, road_cfg.max_turn_deg, road_cfg.samples_per_segment);
    if (!verdict.valid()) {
        std::string why;
        for (auto v : verdict.violations) {
            why += (why.empty() ? "" : ", ") + road::to_string(v);
        }
        throw InvalidRoad("road is invalid: " + why);
    }
    const auto path = road::interpolate(polyline, road_cfg.samples_per_segment);
    return simulate(path, backend, run_seed, controller);
}

Evaluation evaluate(const SimulationTrace& trace, double oracle_threshold)
{
    if (trace.xte.empty()) {
        throw Error("cannot evaluate an empty trace");
    }
    Evaluation e;
    e.max_abs_xte = trace.max_abs_xte();
    e.fitness = -std::min(e.max_abs_xte, trace.cutoff);
    e.failed = e.max_abs_xte > oracle_threshold;
    return e;
}

std::vector<BackendSpec> builtin_ensemble()
{
    BackendSpec a;
    a.id = "A";
    a.description = "kinematic bicycle, ideal actuation, noisy localisation";
    a.dynamics = DynamicsKind::kinematic_ideal;
    a.max_steer_deg = 35.0;
    a.noise_std = 0.6;

    BackendSpec b;
    b.id = "B";
    b.description = "kinematic bicycle, steer-rate limit and 3-step actuator delay";
    b.dynamics = DynamicsKind::kinematic_lagged;
    b.max_steer_deg = 35.0;
    b.steer_rate_limit_deg_s = 40.0;
    b.actuator_delay_steps = 3;

    BackendSpec c;
    c.id = "C";
    c.description = "dynamic single-track model, linear tyre slip, reduced steering, 1-step latency";
    c.dynamics = DynamicsKind::dynamic_slip;
    c.max_steer_deg = 23.0;
    c.actuator_delay_steps = 1;

    return {a, b, c};
}

const BackendSpec& find_backend(const std::vector<BackendSpec>& specs, const std::string& id)
{
    for (const auto& s : specs) {
        if (s.id == id) {
            return s;
        }
    }
    throw Error("unknown backend '" + id + "'");
}

std::string trace_csv(const SimulationTrace& trace)
{
    std::ostringstream out;
    out.precision(17);
    out << "t,x,y,heading_deg,xte\n";
    for (std::size_t i = 0; i < trace.xte.size(); ++i) {
        out << trace.time[i] << ',' << trace.poses[i].x << ',' << trace.poses[i].y << ',' << trace.poses[i].heading_deg << ','
            << trace.xte[i] << '\n';
    }
    return out.str();
}

} // namespace multisim::sim
