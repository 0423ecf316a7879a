#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gaple {

// Edge length of one grid cell in meters; also the translation step size.
inline constexpr double kCellSize = 0.2;
// Wall height in meters; the camera eye sits at half this height.
inline constexpr double kWallHeight = 0.2;

enum class CellKind : uint8_t { Floor, Wall, Object };

struct Cell {
    CellKind kind = CellKind::Wall;
    uint16_t label = 0;  // label_id; meaningful only for Object cells
};

struct GridCoord {
    int x = 0;
    int y = 0;
    bool operator==(const GridCoord&) const = default;
};

struct ObjectInstance {
    int label_id = 0;
    std::vector<GridCoord> cells;  // >= 1 contiguous cells (4-connected)
    bool unique_in_house = false;
};

// Row 0 is the top row of the layout text; y grows downward, x to the right.
enum class Heading : uint8_t { North = 0, East = 1, South = 2, West = 3 };

GridCoord heading_dir(Heading h);
Heading rotate_left(Heading h);
Heading rotate_right(Heading h);
char heading_char(Heading h);
std::optional<Heading> heading_from_char(char c);

struct Pose {
    int x = 0;
    int y = 0;
    Heading heading = Heading::North;
    bool operator==(const Pose&) const = default;
};

enum class Action : uint8_t {
    MoveForward = 0,
    MoveBackward = 1,
    StrafeLeft = 2,
    StrafeRight = 3,
    RotateLeft = 4,
    RotateRight = 5,
};
inline constexpr int kActionCount = 6;

const char* action_name(Action a);

struct HouseLayout {
    int width = 0;
    int height = 0;
    std::vector<Cell> cells;           // row-major: cells[y * width + x]
    std::vector<ObjectInstance> objects;
    std::vector<std::string> labels;   // labels[0] == "background"

    const Cell& at(int x, int y) const { return cells[static_cast<size_t>(y) * width + x]; }
    Cell& at(int x, int y) { return cells[static_cast<size_t>(y) * width + x]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    bool is_floor(int x, int y) const {
        return in_bounds(x, y) && at(x, y).kind == CellKind::Floor;
    }
    bool is_valid_pose(const Pose& p) const { return is_floor(p.x, p.y); }
    int floor_count() const;

    // Label ids of objects with exactly one instance, ascending. These are the
    // admissible navigation targets.
    std::vector<int> unique_object_labels() const;
};

// Text layout format: header "gaple-house v1", a legend section of
// "char=label_name" lines, a blank line, then the grid ('#' wall, '.' floor,
// legend chars for objects). Throws ParseError with 1-based line/column.
HouseLayout parse_layout(const std::string& text);

// Inverse of parse_layout up to legend character assignment.
std::string write_layout(const HouseLayout& layout);

// One action. Translations move one cell relative to the heading, rotations
// turn 90 degrees. A blocked translation returns the input pose unchanged.
Pose step(const HouseLayout& layout, const Pose& pose, Action action);

// All (floor cell, heading) pairs, in row-major cell order with headings
// N,E,S,W innermost. Rotations make all four headings of a cell mutually
// reachable, so this is the full pose set of the layout.
std::vector<Pose> reachable_poses(const HouseLayout& layout);

// Length of the shortest action sequence from start to any goal (BFS over the
// pose graph; collisions are self-loops). nullopt if no goal is reachable.
std::optional<int> min_steps(const HouseLayout& layout, const Pose& start,
                             std::span<const Pose> goals);

// Dense pose id in [0, width*height*4).
inline int pose_index(const HouseLayout& layout, const Pose& p) {
    return (p.y * layout.width + p.x) * 4 + static_cast<int>(p.heading);
}

}  // namespace gaple
