#include "hill/scan.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "hill/parallel.hpp"

namespace hill {

const char* to_string(ScanSection s) {
    switch (s) {
        case ScanSection::ZeroVelocityPlane: return "zero_velocity";
        case ScanSection::PositionMomentumLine: return "position_momentum";
        case ScanSection::EnergySlice: return "energy_slice";
    }
    return "?";
}

ScanSection scan_section_from(const std::string& name) {
    if (name == "zero_velocity") return ScanSection::ZeroVelocityPlane;
    if (name == "position_momentum") return ScanSection::PositionMomentumLine;
    if (name == "energy_slice") return ScanSection::EnergySlice;
    throw std::invalid_argument("unknown scan section: " + name);
}

void ScanSpec::validate() const {
    if (nx < 2 || ny < 2) throw std::invalid_argument("grid must be at least 2x2");
    if (!(window.x0 < window.x1 && window.y0 < window.y1))
        throw std::invalid_argument("window must be nonempty");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

namespace {

// Node -> initial state; false marks an energetically or geometrically
// infeasible node.
bool node_state(const ScanSpec& spec, const ModelParams& p, int i, int j,
                SymplecticState& out) {
    const double x = spec.node_x(i);
    const double y = spec.node_y(j);
    const double excl = std::max(10.0 * spec.cfg.r_collision, 1e-6);
    switch (spec.section) {
        case ScanSection::ZeroVelocityPlane: {
            if (std::hypot(x, y) < excl) return false;
            out = to_symplectic(CartesianState{x, y, 0.0, 0.0});
            return true;
        }
        case ScanSection::PositionMomentumLine: {
            if (std::abs(x) < excl) return false;
            out = SymplecticState{x, 0.0, 0.0, y};  // (x, p_y) plane
            return true;
        }
        case ScanSection::EnergySlice: {
            if (std::hypot(x, y) < excl) return false;
            const double v = effective_potential(p, x, y);
            if (v > spec.energy) return false;
            const double s = std::sqrt(2.0 * (spec.energy - v));
            out = to_symplectic(CartesianState{x, y, s * std::cos(spec.v_angle),
                                               s * std::sin(spec.v_angle)});
            return true;
        }
    }
    return false;
}

std::uint8_t code_of(FateTag tag) {
    switch (tag) {
        case FateTag::Collision: return FateGrid::kCollision;
        case FateTag::GlobalBounded: return FateGrid::kGlobalBounded;
        case FateTag::GlobalEscape: return FateGrid::kEscape;
        case FateTag::Trapped: return FateGrid::kTrapped;
        case FateTag::Undetermined: return FateGrid::kUndetermined;
    }
    return FateGrid::kUndetermined;
}

}  // namespace

FateGrid run_scan(const ScanSpec& spec) {
    spec.validate();
    const ModelParams p(spec.alpha);
    const SymplecticBasis basis = build_basis(p);
    Calibration cal;
    cal.delta_e = calibrate_delta_e(basis, p, 4000, spec.seed + 1);
    cal.delta_x = cal.delta_e / 4.0;

    FateGrid grid;
    grid.spec = spec;
    grid.cal = cal;
    grid.codes.assign(static_cast<size_t>(spec.nx) * spec.ny, FateGrid::kUndetermined);
    grid.times.assign(static_cast<size_t>(spec.nx) * spec.ny, 0.0);

    parallel_for(spec.ny, spec.jobs, [&](long long j) {
        for (int i = 0; i < spec.nx; ++i) {
            const size_t idx = static_cast<size_t>(j) * spec.nx + i;
            SymplecticState s0;
            if (!node_state(spec, p, i, static_cast<int>(j), s0)) {
                grid.codes[idx] = FateGrid::kInfeasible;
                continue;
            }
            try {
                const Fate fate = classify_fate(p, &basis, &cal, s0, spec.cfg);
                grid.codes[idx] = code_of(fate.tag);
                grid.times[idx] = fate.t_terminal;
            } catch (const std::exception&) {
                grid.codes[idx] = FateGrid::kUndetermined;
            }
        }
    });
    return grid;
}

void write_fate_grid(std::ostream& os, const FateGrid& grid) {
    const ScanSpec& s = grid.spec;
    os << "# hill-scan v1 alpha=" << format_double(s.alpha)
       << " section=" << to_string(s.section) << " window=" << format_double(s.window.x0)
       << ',' << format_double(s.window.x1) << ',' << format_double(s.window.y0) << ','
       << format_double(s.window.y1) << " nx=" << s.nx << " ny=" << s.ny << "\n";
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i)
            os << i << ',' << j << ',' << format_double(s.node_x(i)) << ','
               << format_double(s.node_y(j)) << ',' << static_cast<int>(grid.at(i, j))
               << ',' << format_double(grid.time_at(i, j)) << "\n";
}

void write_fate_grid_matrix(std::ostream& os, const FateGrid& grid) {
    os << "# hill-scan-matrix v1 nx=" << grid.spec.nx << " ny=" << grid.spec.ny << "\n";
    for (int j = 0; j < grid.spec.ny; ++j) {
        for (int i = 0; i < grid.spec.nx; ++i)
            os << static_cast<int>(grid.at(i, j)) << (i + 1 < grid.spec.nx ? ' ' : '\n');
    }
}

namespace {

bool is_collision(std::uint8_t c) { return c == FateGrid::kCollision; }
bool is_global(std::uint8_t c) {
    return c == FateGrid::kGlobalBounded || c == FateGrid::kEscape;
}

// Distance from a point to {W = 0} by Newton projection along grad W.
double dist_to_w_zero(const ModelParams& p, double x, double y) {
    double px = x, py = y;
    for (int it = 0; it < 12; ++it) {
        const double w = scaling_w(p, px, py);
        double wx, wy;
        scaling_w_gradient(p, px, py, wx, wy);
        const double g2 = wx * wx + wy * wy;
        if (g2 < 1e-300) break;
        px -= w * wx / g2;
        py -= w * wy / g2;
        if (std::abs(scaling_w(p, px, py)) < 1e-12) break;
    }
    return std::hypot(px - x, py - y);
}

}  // namespace

BoundaryCensus boundary_census(const FateGrid& grid, bool sub_ground_prediction) {
    const ScanSpec& s = grid.spec;
    const ModelParams p(s.alpha);
    BoundaryCensus out;
    const double cell_diag = std::hypot((s.window.x1 - s.window.x0) / (s.nx - 1),
                                        (s.window.y1 - s.window.y0) / (s.ny - 1));
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const std::uint8_t c = grid.at(i, j);
            if (c == FateGrid::kInfeasible) continue;
            ++out.feasible_cells;
            if (c == FateGrid::kUndetermined) ++out.code4_cells;

            if (sub_ground_prediction && (is_collision(c) || is_global(c))) {
                const double w = scaling_w(p, s.node_x(i), s.node_y(j));
                const bool expect_collision = w <= 0.0;
                if (expect_collision != is_collision(c)) ++out.mismatch_cells;
            }

            if (!(is_collision(c) || is_global(c))) continue;
            bool boundary = false;
            for (int dj = -1; dj <= 1 && !boundary; ++dj) {
                for (int di = -1; di <= 1 && !boundary; ++di) {
                    if (di == 0 && dj == 0) continue;
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= s.nx || jj >= s.ny) continue;
                    const std::uint8_t n = grid.at(ii, jj);
                    if ((is_collision(c) && is_global(n)) ||
                        (is_global(c) && is_collision(n)))
                        boundary = true;
                }
            }
            if (boundary) {
                ++out.boundary_cells;
                const double d =
                    dist_to_w_zero(p, s.node_x(i), s.node_y(j)) / cell_diag;
                out.max_dist_to_w0 = std::max(out.max_dist_to_w0, d);
                if (d > 2.0) ++out.off_curve_cells;
            }
        }
    }
    return out;
}

Report boundary_census_multi(const ScanSpec& spec, bool sub_ground_prediction) {
    Report rep;
    rep.set("suite", std::string("boundary-census"));
    rep.set("alpha", spec.alpha);
    long long counts[3] = {0, 0, 0};
    int level = 0;
    for (int mult : {1, 2, 4}) {
        ScanSpec s = spec;
        s.nx = spec.nx * mult;
        s.ny = spec.ny * mult;
        const FateGrid g = run_scan(s);
        const BoundaryCensus c = boundary_census(g, sub_ground_prediction);
        const std::string tag = "x" + std::to_string(mult);
        rep.set(tag + ".boundary_cells", c.boundary_cells);
        rep.set(tag + ".max_dist_to_w0", c.max_dist_to_w0);
        rep.set(tag + ".mismatch_cells", c.mismatch_cells);
        rep.set(tag + ".code4_cells", c.code4_cells);
        counts[level++] = c.boundary_cells;
    }
    if (counts[0] > 0 && counts[1] > 0) {
        rep.set("box_count_slope_1_2", std::log2(static_cast<double>(counts[1]) / counts[0]));
        rep.set("box_count_slope_2_4", std::log2(static_cast<double>(counts[2]) / counts[1]));
    }
    return rep;
}

}  // namespace hill
