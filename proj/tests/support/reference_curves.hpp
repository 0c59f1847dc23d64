#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace linimp::oracle {

// log10(h), log10(max error) for u' = -u - u^2, u0 = 1/3 on [0, 2],
// h = 1/32000 * 2^-k.
inline const std::map<std::string, std::vector<std::pair<double, double>>>& order_one_ode_curves() {
  static const std::map<std::string, std::vector<std::pair<double, double>>> curves = {
      {"linimp:1",
       {{-4.50514997831991, -5.96636311107174}, {-4.80617997398389, -6.26739428806687},
        {-5.10720996964787, -6.56842486934128}, {-5.40823996531185, -6.86945515813429},
        {-5.70926996097583, -7.17048527352206}, {-6.01029995663981, -7.4715153386196},
        {-6.31132995230379, -7.77254549028603}, {-6.61235994796777, -8.07357554092571}}},
      {"euler-imp",
       {{-4.50514997831991, -5.59266548544308}, {-4.80617997398389, -5.89369122568333},
        {-5.10720996964787, -6.19471909047088}, {-5.40823996531185, -6.49574803382238},
        {-5.70926996097583, -6.79677749193149}, {-6.01029995663981, -7.09780720185103},
        {-6.31132995230379, -7.39883712202114}, {-6.61235994796777, -7.69986712885821}}},
      {"euler-exp",
       {{-4.50514997831991, -5.5926484623658}, {-4.80617997398389, -5.89368271305475},
        {-5.10720996964787, -6.19471483724242}, {-5.40823996531185, -6.49574589259063},
        {-5.70926996097583, -6.79677640693406}, {-6.01029995663981, -7.09780666176814},
        {-6.31132995230379, -7.39883681008059}, {-6.61235994796777, -7.69986675018113}}},
      {"lie",
       {{-4.50514997831991, -6.48742277468779}, {-4.80617997398389, -6.78845062852403},
        {-5.10720996964787, -7.08947577519423}, {-5.40823996531185, -7.39049427047066},
        {-5.70926996097583, -7.69163189888726}, {-6.01029995663981, -7.99264816466707},
        {-6.31132995230379, -8.29334401486249}, {-6.61235994796777, -8.59456320713261}}},
  };
  return curves;
}

}  // namespace linimp::oracle
