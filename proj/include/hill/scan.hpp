#ifndef HILL_SCAN_HPP
#define HILL_SCAN_HPP

// Grids of initial conditions classified in parallel into fate maps, plus the
// boundary census used to compare fate boundaries against the W = 0 curve.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hill/integrate.hpp"

namespace hill {

enum class ScanSection { ZeroVelocityPlane, PositionMomentumLine, EnergySlice };
const char* to_string(ScanSection s);
ScanSection scan_section_from(const std::string& name);

struct ScanWindow {
    double x0, x1, y0, y1;
};

struct ScanSpec {
    double alpha = 3.0;
    ScanSection section = ScanSection::ZeroVelocityPlane;
    ScanWindow window{-2.0, 2.0, -2.0, 2.0};
    int nx = 64, ny = 64;
    double energy = 0.0;   // EnergySlice level
    double v_angle = 0.0;  // EnergySlice velocity direction
    IntegratorConfig cfg;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const;
    double node_x(int i) const { return window.x0 + (window.x1 - window.x0) * i / (nx - 1); }
    double node_y(int j) const { return window.y0 + (window.y1 - window.y0) * j / (ny - 1); }
};

struct FateGrid {
    static constexpr std::uint8_t kCollision = 0;
    static constexpr std::uint8_t kGlobalBounded = 1;
    static constexpr std::uint8_t kEscape = 2;
    static constexpr std::uint8_t kTrapped = 3;
    static constexpr std::uint8_t kUndetermined = 4;
    static constexpr std::uint8_t kInfeasible = 255;

    ScanSpec spec;
    Calibration cal;  // constants the classification ran with
    std::vector<std::uint8_t> codes;  // row-major, nx * ny
    std::vector<double> times;

    std::uint8_t at(int i, int j) const { return codes[static_cast<size_t>(j) * spec.nx + i]; }
    double time_at(int i, int j) const { return times[static_cast<size_t>(j) * spec.nx + i]; }
};

FateGrid run_scan(const ScanSpec& spec);

// `# hill-scan v1 ...` header then `i,j,x,y,code,t_end` rows.
void write_fate_grid(std::ostream& os, const FateGrid& grid);
// gnuplot-compatible matrix of codes.
void write_fate_grid_matrix(std::ostream& os, const FateGrid& grid);

struct BoundaryCensus {
    long long feasible_cells = 0;
    long long boundary_cells = 0;     // collision vs global contact (8-neighborhood)
    double max_dist_to_w0 = 0.0;      // boundary-cell distance to {W=0}, cell diagonals
    long long off_curve_cells = 0;    // boundary cells farther than 2 diagonals
    long long mismatch_cells = 0;     // fate disagrees with the sign-of-W prediction
    long long code4_cells = 0;
};

// Census of a grid. `sub_ground_prediction` enables the sign-of-W comparison
// (meaningful for energy slices below the ground-state energy).
BoundaryCensus boundary_census(const FateGrid& grid, bool sub_ground_prediction);

// Reruns the scan at 1x/2x/4x resolution and reports boundary-cell counts and
// box-count slopes between refinements.
Report boundary_census_multi(const ScanSpec& spec, bool sub_ground_prediction);

}  // namespace hill

#endif
