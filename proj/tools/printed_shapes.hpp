#pragma once

#include <array>
#include <vector>

// Cube centers as printed in the original figures, in column order.
namespace printed {

inline const std::vector<std::array<int, 3>> kA = {
    {-7, -3, 1}, {-7, -1, 1}, {-7, 1, 1}, {-7, 3, 1}, {-5, 3, 1}, {-5, 1, 1}, {-5, -1, 1}, {-5, -3, 1},
    {-3, -3, 1}, {-3, -1, 1}, {-3, 1, 1}, {-3, 3, 1}, {-1, 3, 1}, {-1, 1, 1}, {-1, -1, 1}, {-1, -3, 1},
    {1, -3, 1}, {1, -1, 1}, {1, 1, 1}, {1, 3, 1}, {3, 3, 1}, {3, 1, 1}, {3, -1, 1}, {3, -3, 1},
    {5, -3, 1}, {5, -1, 1}, {5, 1, 1}, {5, 3, 1}, {7, 3, 1}, {7, 1, 1}, {7, -1, 1}, {7, -3, 1},
};

inline const std::vector<std::array<int, 3>> kD = {
    {-1, -3, 7}, {-1, -1, 7}, {-1, 1, 7}, {-1, 3, 7}, {-3, 3, 5}, {-3, 1, 5}, {-3, -1, 5}, {-3, -3, 5},
    {-3, -3, 3}, {-3, -1, 3}, {-3, 1, 3}, {-3, 3, 3}, {-1, 3, 1}, {-1, 1, 1}, {-1, -1, 1}, {-1, -3, 1},
    {1, -3, 1}, {1, -1, 1}, {1, 1, 1}, {1, 3, 1}, {3, 3, 3}, {3, 1, 3}, {3, -1, 3}, {3, -3, 3},
    {3, -3, 5}, {3, -1, 5}, {3, 1, 5}, {3, 3, 5}, {1, 3, 7}, {1, 1, 7}, {1, -1, 7}, {1, -3, 7},
};

inline const std::vector<std::array<int, 3>> kE = {
    {-1, -7, 3}, {-1, -5, 5}, {-1, 5, 5}, {-1, 7, 3}, {-3, 7, -1}, {-3, 3, 5}, {-3, -3, 5}, {-3, -7, -1},
    {-3, -5, -1}, {-3, -1, 3}, {-3, 1, 3}, {-3, 5, -1}, {-1, 3, -1}, {-1, 1, 1}, {-1, -1, 1}, {-1, -3, -1},
    {1, -3, -1}, {1, -1, 1}, {1, 1, 1}, {1, 3, -1}, {3, 5, -1}, {3, 1, 3}, {3, -1, 3}, {3, -5, 1},
    {3, -7, 1}, {3, -3, 5}, {3, 3, 5}, {1, 3, 1}, {1, 1, 3}, {1, -1, 5}, {1, -3, 5},
};

}  // namespace printed
