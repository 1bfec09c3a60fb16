#pragma once

#include <vector>

#include "netrecon/common.hpp"

namespace netrecon {

// Nested partition stack: levels[0] labels the N nodes, levels[l] labels
// the groups of levels[l-1]. Labels at each level are 0..B-1, all occupied.
struct HierarchicalPartition
{
    std::vector<std::vector<int32_t>> levels;

    int depth() const { return int(levels.size()); }

    static int32_t group_count(const std::vector<int32_t>& b)
    {
        int32_t mx = -1;
        for (int32_t g : b)
            mx = std::max(mx, g);
        return mx + 1;
    }

    void validate() const
    {
        if (levels.empty())
            throw DataError("HierarchicalPartition: empty hierarchy");
        size_t expect = levels[0].size();
        for (auto& b : levels)
        {
            if (b.size() != expect)
                throw DataError("HierarchicalPartition: level size mismatch");
            int32_t bcount = group_count(b);
            std::vector<char> seen(size_t(bcount), 0);
            for (int32_t g : b)
            {
                if (g < 0 || g >= bcount)
                    throw DataError("HierarchicalPartition: bad group label");
                seen[size_t(g)] = 1;
            }
            for (char c : seen)
                if (!c)
                    throw DataError("HierarchicalPartition: unoccupied group label");
            expect = size_t(bcount);
        }
    }
};

// log of (prod_r n_r!/N!) C(N-1,B-1)^{-1} N^{-1}; labels 0..B-1, all occupied
double log_prior_partition(const std::vector<int32_t>& b);

} // namespace netrecon
