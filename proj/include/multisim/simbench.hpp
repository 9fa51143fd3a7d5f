#pragma once
/**
 * @file   simbench.hpp
 * @brief  Vehicle backends, the pure-pursuit lane keeper under test, and the
 *         cross-track-error fitness / oracle.
 */

#include <multisim/road.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace multisim::sim {

enum class DynamicsKind { kinematic_ideal, kinematic_lagged, dynamic_slip };

std::string to_string(DynamicsKind kind);
DynamicsKind dynamics_from_string(const std::string& name);

struct BackendSpec {
    std::string id;
    std::string description;
    DynamicsKind dynamics = DynamicsKind::kinematic_ideal;
    double max_steer_deg = 35.0;
    std::optional<double> steer_rate_limit_deg_s; ///< none = instantaneous steering
    int actuator_delay_steps = 0;
    double speed = 10.0;    ///< m/s, constant
    double timestep = 0.05; ///< s
    double noise_std = 0.02; ///< sensor position noise, m
    double wheelbase = 2.6;

    // dynamic_slip only: linear single-track model
    double mass = 1500.0;
    double yaw_inertia = 2250.0;
    double cg_to_front = 1.2;
    double cornering_front = 60000.0; ///< N/rad
    double cornering_rear = 90000.0;  ///< N/rad
    int substeps = 10;

    /// Throws Error describing the first broken invariant.
    void check() const;
};

struct ControllerConfig {
    double lookahead = 8.0; ///< m
    double xte_cutoff = 3.0; ///< m; rollout stops beyond this
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading_deg = 0.0; ///< counter-clockwise from +x
};

enum class Termination { end_of_road, xte_cutoff, step_limit };

std::string to_string(Termination t);

struct SimulationTrace {
    std::vector<double> time;
    std::vector<Pose> poses;
    std::vector<double> xte; ///< signed, positive left of the centre line
    Termination terminated_by = Termination::end_of_road;
    double cutoff = 3.0;

    double max_abs_xte() const noexcept;
    friend bool operator==(const SimulationTrace&, const SimulationTrace&) = default;
};

inline bool operator==(const Pose& a, const Pose& b) noexcept
{
    return a.x == b.x && a.y == b.y && a.heading_deg == b.heading_deg;
}

struct Evaluation {
    double fitness = 0.0; ///< -max|xte|, clamped to [-cutoff, 0]
    bool failed = false;
    double max_abs_xte = 0.0;
};

/// Nearest-point projection onto a sampled centre line.
struct Projection {
    std::size_t segment = 0; ///< index of the sample segment
    double t = 0.0;          ///< position on that segment; may leave [0,1] on the end segments
    double s = 0.0;          ///< arc length of the projected point
    double xte = 0.0;
};

class PathTracker {
public:
    explicit PathTracker(const road::RoadPath& path);

    /// Searches a window around the previous projection so the tracker
    /// never jumps to a distant part of a winding road.
    Projection project(road::Vec2 p);

    /// Point at arc length s; extrapolated along the end tangents outside [0, L].
    road::Vec2 point_at(double s) const;

    bool passed_end(const Projection& proj) const noexcept;
    const road::RoadPath& path() const noexcept { return path_; }

private:
    Projection project_on(std::size_t segment, road::Vec2 p) const;

    const road::RoadPath& path_;
    std::size_t hint_ = 0;
};

/// Pure-pursuit steering angle (radians) towards `target` from the given pose.
double pure_pursuit_steer(const Pose& pose, road::Vec2 target, double wheelbase);

SimulationTrace simulate(const road::RoadPath& path, const BackendSpec& backend, std::uint64_t run_seed,
                         const ControllerConfig& controller = {});

/// Throws InvalidRoad if the genotype's road fails validation.
SimulationTrace simulate(const road::RoadGenotype& genotype, const BackendSpec& backend, std::uint64_t run_seed,
                         const road::RoadConfig& road_cfg = {}, const ControllerConfig& controller = {});

Evaluation evaluate(const SimulationTrace& trace, double oracle_threshold = 2.2);

/// Built-in ensemble: A kinematic-ideal, B kinematic with steer-rate limit
/// and actuator delay, C dynamic bicycle with slip and reduced steering.
std::vector<BackendSpec> builtin_ensemble();

/// Looks an id up in `specs`; throws Error if absent.
const BackendSpec& find_backend(const std::vector<BackendSpec>& specs, const std::string& id);

/// CSV with columns t,x,y,heading_deg,xte.
std::string trace_csv(const SimulationTrace& trace);

} // namespace multisim::sim
