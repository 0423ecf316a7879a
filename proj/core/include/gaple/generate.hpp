#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaple/layout.hpp"

namespace gaple {

struct GenParams {
    int width = 13;
    int height = 13;
    int rooms = 3;
    int min_room = 3;   // minimum room side, cells
    int max_room = 7;   // maximum room side, cells
    std::vector<std::string> label_pool;
    int objects = 0;    // labels drawn from the pool, each placed once
    int max_object_cells = 2;
};

// Procedural house: BSP room split of the interior, L-shaped corridors
// between successive rooms, then unique single-label objects carved out of
// floor cells. Deterministic per seed. The returned layout has a fully walled
// border, all floor cells mutually reachable, and every object adjacent to at
// least one floor cell. Throws GenerationError when the parameters are
// infeasible.
HouseLayout generate_house(uint64_t seed, const GenParams& params);

// True when every floor cell is reachable from every other via 4-adjacency.
bool floor_connected(const HouseLayout& layout);

}  // namespace gaple
