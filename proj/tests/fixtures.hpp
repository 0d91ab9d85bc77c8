#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "tradespill/ingest.hpp"
#include "tradespill/trade_tensor.hpp"

namespace fixtures {

struct Flow {
    int year;
    std::string origin;
    std::string product;
    std::string destination;
    double value;
};

// Tensor from (year, o, p, d, value) rows via the exporter-reported path.
inline tradespill::TradeTensor tensor(const std::vector<Flow>& flows) {
    using namespace tradespill;
    std::vector<TradeFlowRecord> records;
    for (const auto& f : flows) {
        records.push_back({f.year, CountryCode::from(f.origin), CountryCode::from(f.destination),
                           ProductCode::from(f.product), f.value, Reporter::Exporter});
    }
    return reconcile(records).tensor;
}

inline std::uint32_t c(const tradespill::TradeTensor& t, const char* code) {
    return *t.country_index(tradespill::CountryCode::from(code));
}
inline std::uint32_t p(const tradespill::TradeTensor& t, const char* code) {
    return *t.product_index(tradespill::ProductCode::from(code));
}

}  // namespace fixtures
