#include "gaple/layout.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "gaple/errors.hpp"

namespace gaple {

GridCoord heading_dir(Heading h) {
    switch (h) {
        case Heading::North: return {0, -1};
        case Heading::East: return {1, 0};
        case Heading::South: return {0, 1};
        case Heading::West: return {-1, 0};
    }
    return {0, 0};
}

Heading rotate_left(Heading h) {
    return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading rotate_right(Heading h) {
    return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

char heading_char(Heading h) {
    switch (h) {
        case Heading::North: return 'N';
        case Heading::East: return 'E';
        case Heading::South: return 'S';
        case Heading::West: return 'W';
    }
    return '?';
}

std::optional<Heading> heading_from_char(char c) {
    switch (c) {
        case 'N': return Heading::North;
        case 'E': return Heading::East;
        case 'S': return Heading::South;
        case 'W': return Heading::West;
        default: return std::nullopt;
    }
}

const char* action_name(Action a) {
    switch (a) {
        case Action::MoveForward: return "forward";
        case Action::MoveBackward: return "backward";
        case Action::StrafeLeft: return "strafe_left";
        case Action::StrafeRight: return "strafe_right";
        case Action::RotateLeft: return "rotate_left";
        case Action::RotateRight: return "rotate_right";
    }
    return "?";
}

int HouseLayout::floor_count() const {
    int n = 0;
    for (const Cell& c : cells) {
        if (c.kind == CellKind::Floor) ++n;
    }
    return n;
}

std::vector<int> HouseLayout::unique_object_labels() const {
    std::vector<int> out;
    for (const ObjectInstance& obj : objects) {
        if (obj.unique_in_house) out.push_back(obj.label_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        if (cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
    }
    return lines;
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

// Groups contiguous (4-connected) same-label object cells into instances and
// marks label uniqueness.
void collect_objects(HouseLayout& layout) {
    const int w = layout.width, h = layout.height;
    std::vector<uint8_t> seen(static_cast<size_t>(w) * h, 0);
    std::map<int, int> instances_per_label;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Cell& c = layout.at(x, y);
            if (c.kind != CellKind::Object || seen[static_cast<size_t>(y) * w + x]) continue;
            ObjectInstance obj;
            obj.label_id = c.label;
            std::deque<GridCoord> frontier{{x, y}};
            seen[static_cast<size_t>(y) * w + x] = 1;
            while (!frontier.empty()) {
                GridCoord g = frontier.front();
                frontier.pop_front();
                obj.cells.push_back(g);
                const GridCoord nbrs[4] = {{g.x + 1, g.y}, {g.x - 1, g.y}, {g.x, g.y + 1}, {g.x, g.y - 1}};
                for (const GridCoord& n : nbrs) {
                    if (!layout.in_bounds(n.x, n.y)) continue;
                    size_t idx = static_cast<size_t>(n.y) * w + n.x;
                    if (seen[idx]) continue;
                    const Cell& nc = layout.at(n.x, n.y);
                    if (nc.kind == CellKind::Object && nc.label == c.label) {
                        seen[idx] = 1;
                        frontier.push_back(n);
                    }
                }
            }
            ++instances_per_label[obj.label_id];
            layout.objects.push_back(std::move(obj));
        }
    }
    for (ObjectInstance& obj : layout.objects) {
        obj.unique_in_house = instances_per_label[obj.label_id] == 1;
    }
}

}  // namespace

HouseLayout parse_layout(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || is_blank(lines[0])) {
        throw ParseError(1, 1, "missing header 'gaple-house v1'");
    }
    if (lines[0] != "gaple-house v1") {
        throw ParseError(1, 1, "unsupported header '" + lines[0] + "', expected 'gaple-house v1'");
    }

    HouseLayout layout;
    layout.labels.push_back("background");
    std::map<char, uint16_t> legend;
    std::map<std::string, uint16_t> label_ids;

    size_t i = 1;
    for (; i < lines.size() && !is_blank(lines[i]); ++i) {
        const std::string& ln = lines[i];
        const int lineno = static_cast<int>(i) + 1;
        const size_t eq = ln.find('=');
        if (eq == std::string::npos || eq != 1 || ln.size() < 3) {
            throw ParseError(lineno, 1, "legend line must be '<char>=<label_name>'");
        }
        const char key = ln[0];
        const std::string name = ln.substr(2);
        if (key == '#' || key == '.') {
            throw ParseError(lineno, 1, std::string("legend character '") + key + "' is reserved");
        }
        if (legend.count(key)) {
            throw ParseError(lineno, 1, std::string("duplicate legend character '") + key + "'");
        }
        uint16_t id;
        auto it = label_ids.find(name);
        if (it != label_ids.end()) {
            id = it->second;
        } else {
            id = static_cast<uint16_t>(layout.labels.size());
            layout.labels.push_back(name);
            label_ids.emplace(name, id);
        }
        legend.emplace(key, id);
    }
    if (i < lines.size()) ++i;  // skip the blank separator

    size_t grid_end = lines.size();
    while (grid_end > i && is_blank(lines[grid_end - 1])) --grid_end;
    if (grid_end <= i) {
        throw ParseError(static_cast<int>(i) + 1, 1, "empty grid");
    }

    const size_t grid_start = i;
    layout.height = static_cast<int>(grid_end - grid_start);
    layout.width = static_cast<int>(lines[grid_start].size());
    if (layout.width == 0) {
        throw ParseError(static_cast<int>(grid_start) + 1, 1, "empty grid row");
    }
    layout.cells.assign(static_cast<size_t>(layout.width) * layout.height, Cell{});

    for (size_t r = grid_start; r < grid_end; ++r) {
        const std::string& row = lines[r];
        const int lineno = static_cast<int>(r) + 1;
        const int y = static_cast<int>(r - grid_start);
        if (static_cast<int>(row.size()) != layout.width) {
            const int col = static_cast<int>(std::min(row.size(), static_cast<size_t>(layout.width))) + 1;
            throw ParseError(lineno, col,
                             "ragged row: expected width " + std::to_string(layout.width) +
                                 ", got " + std::to_string(row.size()));
        }
        for (int x = 0; x < layout.width; ++x) {
            const char c = row[x];
            Cell& cell = layout.at(x, y);
            if (c == '#') {
                cell = {CellKind::Wall, 0};
            } else if (c == '.') {
                cell = {CellKind::Floor, 0};
            } else {
                auto it = legend.find(c);
                if (it == legend.end()) {
                    throw ParseError(lineno, x + 1, std::string("unknown grid character '") + c + "'");
                }
                cell = {CellKind::Object, it->second};
            }
            const bool border = x == 0 || y == 0 || x == layout.width - 1 || y == layout.height - 1;
            if (border && cell.kind != CellKind::Wall) {
                throw ParseError(lineno, x + 1, "border cell must be a wall");
            }
        }
    }

    collect_objects(layout);
    return layout;
}

std::string write_layout(const HouseLayout& layout) {
    // Canonical legend characters: labels 1..52 map to 'A'..'Z','a'..'z'.
    auto label_char = [](int id) -> char {
        const int k = id - 1;
        return k < 26 ? static_cast<char>('A' + k) : static_cast<char>('a' + (k - 26));
    };
    std::ostringstream out;
    out << "gaple-house v1\n";
    for (size_t id = 1; id < layout.labels.size(); ++id) {
        out << label_char(static_cast<int>(id)) << '=' << layout.labels[id] << '\n';
    }
    out << '\n';
    for (int y = 0; y < layout.height; ++y) {
        for (int x = 0; x < layout.width; ++x) {
            const Cell& c = layout.at(x, y);
            switch (c.kind) {
                case CellKind::Wall: out << '#'; break;
                case CellKind::Floor: out << '.'; break;
                case CellKind::Object: out << label_char(c.label); break;
            }
        }
        out << '\n';
    }
    return out.str();
}

Pose step(const HouseLayout& layout, const Pose& pose, Action action) {
    switch (action) {
        case Action::RotateLeft: return {pose.x, pose.y, rotate_left(pose.heading)};
        case Action::RotateRight: return {pose.x, pose.y, rotate_right(pose.heading)};
        default: break;
    }
    GridCoord d = heading_dir(pose.heading);
    switch (action) {
        case Action::MoveForward: break;
        case Action::MoveBackward: d = {-d.x, -d.y}; break;
        case Action::StrafeLeft: d = heading_dir(rotate_left(pose.heading)); break;
        case Action::StrafeRight: d = heading_dir(rotate_right(pose.heading)); break;
        default: break;
    }
    const int nx = pose.x + d.x, ny = pose.y + d.y;
    if (!layout.is_floor(nx, ny)) return pose;  // collision: stuck in place
    return {nx, ny, pose.heading};
}

std::vector<Pose> reachable_poses(const HouseLayout& layout) {
    std::vector<Pose> poses;
    poses.reserve(static_cast<size_t>(layout.floor_count()) * 4);
    for (int y = 0; y < layout.height; ++y) {
        for (int x = 0; x < layout.width; ++x) {
            if (!layout.is_floor(x, y)) continue;
            for (int h = 0; h < 4; ++h) {
                poses.push_back({x, y, static_cast<Heading>(h)});
            }
        }
    }
    return poses;
}

std::optional<int> min_steps(const HouseLayout& layout, const Pose& start,
                             std::span<const Pose> goals) {
    const size_t n = static_cast<size_t>(layout.width) * layout.height * 4;
    std::vector<uint8_t> is_goal(n, 0);
    for (const Pose& g : goals) is_goal[pose_index(layout, g)] = 1;
    if (is_goal[pose_index(layout, start)]) return 0;

    std::vector<int> dist(n, -1);
    std::deque<Pose> frontier{start};
    dist[pose_index(layout, start)] = 0;
    while (!frontier.empty()) {
        const Pose p = frontier.front();
        frontier.pop_front();
        const int d = dist[pose_index(layout, p)];
        for (int a = 0; a < kActionCount; ++a) {
            const Pose q = step(layout, p, static_cast<Action>(a));
            const int qi = pose_index(layout, q);
            if (dist[qi] >= 0) continue;
            if (is_goal[qi]) return d + 1;
            dist[qi] = d + 1;
            frontier.push_back(q);
        }
    }
    return std::nullopt;
}

}  // namespace gaple
