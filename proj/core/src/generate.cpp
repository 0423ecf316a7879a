#include "gaple/generate.hpp"

#include <algorithm>
#include <deque>

#include "gaple/errors.hpp"
#include "gaple/rng.hpp"

namespace gaple {

namespace {

struct Rect {
    int x, y, w, h;
    int area() const { return w * h; }
};

// Splits leaves until `rooms` remain or nothing can be split further. A split
// inserts a 1-cell wall line, so a leaf needs 2*min + 1 cells along the split
// axis.
std::vector<Rect> bsp_split(Rect interior, int rooms, int min_room, Rng& rng) {
    std::vector<Rect> leaves{interior};
    const int need = 2 * min_room + 1;
    while (static_cast<int>(leaves.size()) < rooms) {
        // split the largest splittable leaf
        int best = -1;
        for (size_t i = 0; i < leaves.size(); ++i) {
            if (leaves[i].w < need && leaves[i].h < need) continue;
            if (best < 0 || leaves[i].area() > leaves[best].area()) best = static_cast<int>(i);
        }
        if (best < 0) {
            throw GenerationError("cannot fit " + std::to_string(rooms) +
                                  " rooms of side >= " + std::to_string(min_room) +
                                  " into the interior");
        }
        Rect leaf = leaves[best];
        const bool vertical = leaf.w >= need && (leaf.h < need || leaf.w >= leaf.h);
        if (vertical) {
            const int cut = min_room + rng.uniform_index(leaf.w - 2 * min_room);  // offset of wall col
            Rect left{leaf.x, leaf.y, cut, leaf.h};
            Rect right{leaf.x + cut + 1, leaf.y, leaf.w - cut - 1, leaf.h};
            leaves[best] = left;
            leaves.push_back(right);
        } else {
            const int cut = min_room + rng.uniform_index(leaf.h - 2 * min_room);
            Rect top{leaf.x, leaf.y, leaf.w, cut};
            Rect bottom{leaf.x, leaf.y + cut + 1, leaf.w, leaf.h - cut - 1};
            leaves[best] = top;
            leaves.push_back(bottom);
        }
    }
    return leaves;
}

void carve(HouseLayout& layout, int x, int y) {
    layout.at(x, y) = {CellKind::Floor, 0};
}

// Axis-aligned segment between two points sharing a row or column.
void carve_line(HouseLayout& layout, GridCoord a, GridCoord b) {
    for (int x = std::min(a.x, b.x); x <= std::max(a.x, b.x); ++x) {
        for (int y = std::min(a.y, b.y); y <= std::max(a.y, b.y); ++y) {
            carve(layout, x, y);
        }
    }
}

void carve_corridor(HouseLayout& layout, GridCoord from, GridCoord to, Rng& rng) {
    // L-shaped: horizontal then vertical, or the other way round
    const GridCoord corner =
        rng.chance(0.5) ? GridCoord{to.x, from.y} : GridCoord{from.x, to.y};
    carve_line(layout, from, corner);
    carve_line(layout, corner, to);
}

std::vector<GridCoord> floor_cells(const HouseLayout& layout) {
    std::vector<GridCoord> out;
    for (int y = 0; y < layout.height; ++y) {
        for (int x = 0; x < layout.width; ++x) {
            if (layout.is_floor(x, y)) out.push_back({x, y});
        }
    }
    return out;
}

int count_component(const HouseLayout& layout, GridCoord start) {
    std::vector<uint8_t> seen(static_cast<size_t>(layout.width) * layout.height, 0);
    std::deque<GridCoord> frontier{start};
    seen[static_cast<size_t>(start.y) * layout.width + start.x] = 1;
    int n = 0;
    while (!frontier.empty()) {
        GridCoord g = frontier.front();
        frontier.pop_front();
        ++n;
        const GridCoord nbrs[4] = {{g.x + 1, g.y}, {g.x - 1, g.y}, {g.x, g.y + 1}, {g.x, g.y - 1}};
        for (const GridCoord& c : nbrs) {
            if (!layout.is_floor(c.x, c.y)) continue;
            size_t idx = static_cast<size_t>(c.y) * layout.width + c.x;
            if (!seen[idx]) {
                seen[idx] = 1;
                frontier.push_back(c);
            }
        }
    }
    return n;
}

bool has_floor_neighbor(const HouseLayout& layout, GridCoord g) {
    return layout.is_floor(g.x + 1, g.y) || layout.is_floor(g.x - 1, g.y) ||
           layout.is_floor(g.x, g.y + 1) || layout.is_floor(g.x, g.y - 1);
}

// Converts `cells` to object cells if the remaining floor stays connected and
// each object cell keeps a floor neighbor. Returns false and restores the
// grid otherwise.
bool try_place(HouseLayout& layout, const std::vector<GridCoord>& cells, uint16_t label) {
    std::vector<Cell> saved;
    saved.reserve(cells.size());
    for (const GridCoord& g : cells) {
        saved.push_back(layout.at(g.x, g.y));
        layout.at(g.x, g.y) = {CellKind::Object, label};
    }
    auto restore = [&] {
        for (size_t i = 0; i < cells.size(); ++i) {
            layout.at(cells[i].x, cells[i].y) = saved[i];
        }
    };
    for (const GridCoord& g : cells) {
        if (!has_floor_neighbor(layout, g)) {
            restore();
            return false;
        }
    }
    const std::vector<GridCoord> floors = floor_cells(layout);
    if (floors.empty() || count_component(layout, floors.front()) != static_cast<int>(floors.size())) {
        restore();
        return false;
    }
    return true;
}

}  // namespace

bool floor_connected(const HouseLayout& layout) {
    const std::vector<GridCoord> floors = floor_cells(layout);
    if (floors.empty()) return true;
    return count_component(layout, floors.front()) == static_cast<int>(floors.size());
}

HouseLayout generate_house(uint64_t seed, const GenParams& params) {
    if (params.width < 5 || params.height < 5 || params.width > 64 || params.height > 64) {
        throw GenerationError("width/height must be in [5, 64]");
    }
    if (params.rooms < 1 || params.min_room < 2 || params.max_room < params.min_room) {
        throw GenerationError("invalid room parameters");
    }
    if (params.objects < 0 || params.objects > static_cast<int>(params.label_pool.size())) {
        throw GenerationError("objects exceeds label pool size");
    }
    if (params.max_object_cells < 1) {
        throw GenerationError("max_object_cells must be >= 1");
    }

    Rng rng(seed);
    HouseLayout layout;
    layout.width = params.width;
    layout.height = params.height;
    layout.cells.assign(static_cast<size_t>(params.width) * params.height,
                        Cell{CellKind::Wall, 0});
    layout.labels.push_back("background");

    const Rect interior{1, 1, params.width - 2, params.height - 2};
    if (interior.w < params.min_room || interior.h < params.min_room) {
        throw GenerationError("interior smaller than min_room");
    }
    const std::vector<Rect> leaves = bsp_split(interior, params.rooms, params.min_room, rng);

    std::vector<GridCoord> centers;
    for (const Rect& leaf : leaves) {
        const int rw = params.min_room + rng.uniform_index(
                           std::min(params.max_room, leaf.w) - params.min_room + 1);
        const int rh = params.min_room + rng.uniform_index(
                           std::min(params.max_room, leaf.h) - params.min_room + 1);
        const int rx = leaf.x + rng.uniform_index(leaf.w - rw + 1);
        const int ry = leaf.y + rng.uniform_index(leaf.h - rh + 1);
        for (int y = ry; y < ry + rh; ++y) {
            for (int x = rx; x < rx + rw; ++x) carve(layout, x, y);
        }
        centers.push_back({rx + rw / 2, ry + rh / 2});
    }
    for (size_t i = 1; i < centers.size(); ++i) {
        carve_corridor(layout, centers[i - 1], centers[i], rng);
    }

    // pick object labels without replacement
    std::vector<int> pool_order(params.label_pool.size());
    for (size_t i = 0; i < pool_order.size(); ++i) pool_order[i] = static_cast<int>(i);
    rng.shuffle(pool_order);

    for (int k = 0; k < params.objects; ++k) {
        const uint16_t label = static_cast<uint16_t>(layout.labels.size());
        layout.labels.push_back(params.label_pool[pool_order[k]]);

        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const std::vector<GridCoord> floors = floor_cells(layout);
            if (floors.size() < 2) break;
            GridCoord g = floors[rng.uniform_index(floors.size())];
            std::vector<GridCoord> cells{g};
            if (params.max_object_cells >= 2 && rng.chance(0.4)) {
                GridCoord nbrs[4] = {{g.x + 1, g.y}, {g.x - 1, g.y}, {g.x, g.y + 1}, {g.x, g.y - 1}};
                const int start = rng.uniform_index(4);
                for (int j = 0; j < 4; ++j) {
                    GridCoord n = nbrs[(start + j) % 4];
                    if (layout.is_floor(n.x, n.y)) {
                        cells.push_back(n);
                        break;
                    }
                }
            }
            if (try_place(layout, cells, label)) {
                ObjectInstance obj;
                obj.label_id = label;
                obj.cells = cells;
                obj.unique_in_house = true;
                layout.objects.push_back(std::move(obj));
                placed = true;
            } else if (cells.size() > 1) {
                // retry as a single cell before giving up on this attempt
                cells.resize(1);
                if (try_place(layout, cells, label)) {
                    ObjectInstance obj;
                    obj.label_id = label;
                    obj.cells = cells;
                    obj.unique_in_house = true;
                    layout.objects.push_back(std::move(obj));
                    placed = true;
                }
            }
        }
        if (!placed) {
            throw GenerationError("could not place object '" + params.label_pool[pool_order[k]] + "'");
        }
    }

    return layout;
}

}  // namespace gaple
