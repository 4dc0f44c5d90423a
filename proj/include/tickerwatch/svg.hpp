#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tickerwatch/dates.hpp"
#include "tickerwatch/event_study.hpp"
#include "tickerwatch/ingest.hpp"

namespace tickerwatch {

/// Three stacked panels per event: abnormal-return bars, the cumulative line
/// and abnormal-volume bars, with the event marked at offset 0 and dashed
/// reference lines at 0 (returns) and 1 (volume).
void write_event_study_chart(std::ostream& out, const EventStudyResult& result);

/// Price line over volume bars with vertical markers on confirmed alert days.
void write_price_alert_chart(std::ostream& out, const MarketSeries& market,
                             const std::vector<Date>& alert_days);

}  // namespace tickerwatch
