#pragma once

#include <string>
#include <vector>

#include "atp/table.hpp"

namespace atp::testing {

// Sports spectatorship table used across the table, harness and acceptance
// suites, together with its known adversarial layout.
inline Table sports_table() {
  Table t;
  t.id = "sports";
  t.header = {"Competition", "Total spectatorship", "Average match attendance", "Year"};
  t.rows = {
      {"A-League", "1,772,133", "12,707", "2012/2013"},
      {"Australian Football League", "6,931,085", "33,484", "2013"},
      {"Big Bash League", "550,262", "17,750", "2011/2012"},
      {"National Basketball League", "547,021", "4,031", "2010/2011"},
      {"National Rugby League", "3,345,248", "16,643", "2013"},
      {"Super Rugby", "773,940", "19,348", "2012"},
      {"Rugby Championship", "133,532", "44,511", "2012"},
      {"State of Origin series", "186,607", "62,202", "2011"},
      {"Women's National Basketball League", "77,944", "", "2010/2011"},
  };
  return t;
}

inline const std::string& sports_table_serialized() {
  static const std::string s =
      "Competition|Total spectatorship|Average match attendance|Year|\n"
      "A-League|1,772,133|12,707|2012/2013|\n"
      "Australian Football League|6,931,085|33,484|2013|\n"
      "Big Bash League|550,262|17,750|2011/2012|\n"
      "National Basketball League|547,021|4,031|2010/2011|\n"
      "National Rugby League|3,345,248|16,643|2013|\n"
      "Super Rugby|773,940|19,348|2012|\n"
      "Rugby Championship|133,532|44,511|2012|\n"
      "State of Origin series|186,607|62,202|2011|\n"
      "Women's National Basketball League|77,944||2010/2011|";
  return s;
}

inline RowPerm sports_adversarial_row_perm() {
  return RowPerm({4, 8, 1, 3, 2, 7, 5, 0, 6});
}

inline ColPerm sports_adversarial_col_perm() {
  return ColPerm({0, 1, 3, 2});
}

inline const std::string& sports_table_adversarial_serialized() {
  static const std::string s =
      "Competition|Total spectatorship|Year|Average match attendance|\n"
      "National Rugby League|3,345,248|2013|16,643|\n"
      "Women's National Basketball League|77,944|2010/2011||\n"
      "Australian Football League|6,931,085|2013|33,484|\n"
      "National Basketball League|547,021|2010/2011|4,031|\n"
      "Big Bash League|550,262|2011/2012|17,750|\n"
      "State of Origin series|186,607|2011|62,202|\n"
      "Super Rugby|773,940|2012|19,348|\n"
      "A-League|1,772,133|2012/2013|12,707|\n"
      "Rugby Championship|133,532|2012|44,511|";
  return s;
}

}  // namespace atp::testing
