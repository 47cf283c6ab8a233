#include "localdiff/types.hpp"

#include <cctype>

namespace localdiff {

std::optional<CardType> card_type_from_string(std::string_view s) {
    if (s == "consumer_credit") return CardType::consumer_credit;
    if (s == "other") return CardType::other;
    return std::nullopt;
}

std::optional<Channel> channel_from_string(std::string_view s) {
    if (s == "online") return Channel::online;
    if (s == "offline") return Channel::offline;
    return std::nullopt;
}

std::optional<WatchlistCategory> watchlist_category_from_string(std::string_view s) {
    if (s == "concern") return WatchlistCategory::concern;
    if (s == "enhanced_support") return WatchlistCategory::enhanced_support;
    if (s == "intervention") return WatchlistCategory::intervention;
    return std::nullopt;
}

std::string_view to_string(CardType t) {
    return t == CardType::consumer_credit ? "consumer_credit" : "other";
}

std::string_view to_string(Channel c) {
    return c == Channel::online ? "online" : "offline";
}

std::string_view to_string(WatchlistCategory c) {
    switch (c) {
        case WatchlistCategory::concern: return "concern";
        case WatchlistCategory::enhanced_support: return "enhanced_support";
        default: return "intervention";
    }
}

std::string normalize_sector(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::toupper(c));
    }
    return out;
}

bool sector_shape_ok(std::string_view s) {
    // ^[A-Z]{1,2}[0-9][A-Z0-9]? [0-9]$
    auto alpha = [](char c) { return c >= 'A' && c <= 'Z'; };
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    std::size_t i = 0;
    if (i >= s.size() || !alpha(s[i])) return false;
    ++i;
    if (i < s.size() && alpha(s[i])) ++i;
    if (i >= s.size() || !digit(s[i])) return false;
    ++i;
    if (i < s.size() && (alpha(s[i]) || digit(s[i]))) ++i;
    if (i >= s.size() || s[i] != ' ') return false;
    ++i;
    if (i >= s.size() || !digit(s[i])) return false;
    ++i;
    return i == s.size();
}

} // namespace localdiff
