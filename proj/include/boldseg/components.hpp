#pragma once

#include <cstdint>
#include <vector>

#include "boldseg/volume.hpp"

namespace boldseg {

// Keeps only the largest 26-connected foreground component. Empty input stays
// empty. Ties break on the component found first in scan order, which is
// deterministic.
inline LabelMap largest_component_26(const LabelMap& m) {
    const int nx = m.dim.nx, ny = m.dim.ny, nz = m.dim.nz;
    std::vector<std::int32_t> comp(m.data.size(), -1);
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> stack;

    for (std::size_t seed = 0; seed < m.data.size(); ++seed) {
        if (!m.data[seed] || comp[seed] >= 0) continue;
        std::int32_t id = static_cast<std::int32_t>(sizes.size());
        std::size_t count = 0;
        comp[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            ++count;
            int x = static_cast<int>(i % nx);
            int y = static_cast<int>((i / nx) % ny);
            int z = static_cast<int>(i / (static_cast<std::size_t>(nx) * ny));
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy && !dz) continue;
                        int xx = x + dx, yy = y + dy, zz = z + dz;
                        if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz)
                            continue;
                        std::size_t j = m.dim.idx(xx, yy, zz);
                        if (m.data[j] && comp[j] < 0) {
                            comp[j] = id;
                            stack.push_back(j);
                        }
                    }
        }
        sizes.push_back(count);
    }

    if (sizes.empty()) return m;  // nothing foreground

    std::int32_t best = 0;
    for (std::int32_t id = 1; id < static_cast<std::int32_t>(sizes.size()); ++id)
        if (sizes[id] > sizes[best]) best = id;

    std::vector<std::uint8_t> out(m.data.size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = comp[i] == best ? 1 : 0;
    return LabelMap(m.dim, m.spacing, std::move(out));
}

}  // namespace boldseg
