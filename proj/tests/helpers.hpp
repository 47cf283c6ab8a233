#pragma once

#include "localdiff/ingest.hpp"
#include "localdiff/series.hpp"
#include "localdiff/types.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testutil {

/// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("localdiff_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline localdiff::Date date(const char* iso) {
    auto d = localdiff::Date::parse(iso);
    if (!d) throw std::runtime_error(std::string("bad test date: ") + iso);
    return *d;
}

/// Transaction with innocuous defaults; tests override what they probe.
inline localdiff::Transaction make_txn(const char* iso_date, std::int64_t amount,
                                       std::string sector = "AL1 2",
                                       std::string category = "retail",
                                       localdiff::Channel channel = localdiff::Channel::offline) {
    localdiff::Transaction t;
    t.account_id = "acct-1";
    t.date = date(iso_date);
    t.amount_pence = amount;
    t.currency = "GBP";
    t.card_type = localdiff::CardType::consumer_credit;
    t.channel = channel;
    t.category = std::move(category);
    t.cardholder_sector = std::move(sector);
    t.merchant_authority = "M1";
    return t;
}

/// Tags transactions directly, bypassing the sector lookup: each entry is
/// (authority code, transaction).
inline localdiff::TaggedTransactions make_tagged(
    std::vector<std::pair<std::string, localdiff::Transaction>> rows) {
    localdiff::TaggedTransactions tagged;
    for (auto& [auth, txn] : rows) {
        tagged.authority.push_back(tagged.authorities.intern(auth));
        tagged.txns.push_back(std::move(txn));
    }
    return tagged;
}

inline localdiff::RealSeries make_series(const char* start_iso, std::vector<double> values) {
    localdiff::RealSeries s;
    s.start = date(start_iso);
    s.values = std::move(values);
    return s;
}

} // namespace testutil
