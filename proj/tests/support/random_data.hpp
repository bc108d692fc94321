#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "gw/session.hpp"

namespace gw::testing {

std::string read_text(const std::string& path);
std::string fixture_csv();  // the 8-row salaries table

struct RandomTableSpec {
    std::size_t min_rows = 5;
    std::size_t max_rows = 200;
    std::size_t min_cat = 2;
    std::size_t max_cat = 4;
    std::size_t min_num = 1;
    std::size_t max_num = 3;
};

// Small dirty table: categorical columns with few values (some null),
// numeric columns with injected nulls, text ("12k", "n/a", "$1,200") and
// outliers.
std::string random_csv(std::mt19937_64& rng, const RandomTableSpec& spec = {});

// A random applicable action against the session's current state, drawn
// from every built-in kind and any registered custom wranglers; nullopt when
// the session has no errors left to act on.
std::optional<RepairAction> random_action(const Session& s, std::mt19937_64& rng);

}  // namespace gw::testing
