#include "crossdiff/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "crossdiff/error.hpp"

namespace crossdiff {

double min_cost_transport(std::span<const double> supply, std::span<const double> demand,
                          const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t ns = supply.size();
  const std::size_t nd = demand.size();
  const double total_s = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_d = std::accumulate(demand.begin(), demand.end(), 0.0);
  for (double v : supply)
    if (!(v >= 0.0)) throw DomainError("transport: supplies must be nonnegative");
  for (double v : demand)
    if (!(v >= 0.0)) throw DomainError("transport: demands must be nonnegative");
  if (std::abs(total_s - total_d) > 1e-12 * std::max(1.0, total_s))
    throw DomainError("transport: supply and demand totals differ");
  if (total_s == 0.0) return 0.0;

  std::vector<double> c(ns * nd);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nd; ++j) {
      c[i * nd + j] = cost(i, j);
      if (!(c[i * nd + j] >= 0.0)) throw DomainError("transport: costs must be nonnegative");
    }

  // Nodes: 0 = source, 1..ns supplies, ns+1..ns+nd demands, ns+nd+1 = sink.
  const std::size_t nn = ns + nd + 2;
  const std::size_t src = 0, snk = nn - 1;
  auto sup = [](std::size_t i) { return i + 1; };
  auto dem = [ns](std::size_t j) { return ns + 1 + j; };

  std::vector<double> rem_s(supply.begin(), supply.end());
  std::vector<double> rem_d(demand.begin(), demand.end());
  std::vector<double> flow(ns * nd, 0.0);
  std::vector<double> pot(nn, 0.0);
  const double tol = 1e-14 * total_s;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> dist(nn);
  std::vector<std::size_t> prev(nn);
  std::vector<char> done(nn);
  double remaining = total_s;

  while (remaining > tol) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), 0);
    dist[src] = 0.0;
    auto relax = [&](std::size_t u, std::size_t v, double w) {
      const double nd_ = dist[u] + w + pot[u] - pot[v];
      if (nd_ < dist[v]) {
        dist[v] = nd_;
        prev[v] = u;
      }
    };
    for (;;) {
      std::size_t u = nn;
      double best = inf;
      for (std::size_t v = 0; v < nn; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == nn) break;
      done[u] = 1;
      if (u == src) {
        for (std::size_t i = 0; i < ns; ++i)
          if (rem_s[i] > tol) relax(u, sup(i), 0.0);
      } else if (u <= ns) {
        const std::size_t i = u - 1;
        if (supply[i] - rem_s[i] > tol) relax(u, src, 0.0);
        for (std::size_t j = 0; j < nd; ++j) relax(u, dem(j), c[i * nd + j]);
      } else if (u < snk) {
        const std::size_t j = u - ns - 1;
        for (std::size_t i = 0; i < ns; ++i)
          if (flow[i * nd + j] > tol) relax(u, sup(i), -c[i * nd + j]);
        if (rem_d[j] > tol) relax(u, snk, 0.0);
      } else {
        for (std::size_t j = 0; j < nd; ++j)
          if (demand[j] - rem_d[j] > tol) relax(u, dem(j), 0.0);
      }
    }
    if (!(dist[snk] < inf)) throw Error("transport: no augmenting path (inconsistent residual graph)");
    const double reach = dist[snk];
    for (std::size_t v = 0; v < nn; ++v) pot[v] += std::min(dist[v], reach);

    double push = inf;
    for (std::size_t v = snk; v != src;) {
      const std::size_t u = prev[v];
      if (u == src) {
        push = std::min(push, rem_s[v - 1]);
      } else if (v == snk) {
        push = std::min(push, rem_d[u - ns - 1]);
      } else if (u <= ns && v > ns) {
        // forward arc, unbounded
      } else if (u > ns && v <= ns && v >= 1) {
        push = std::min(push, flow[(v - 1) * nd + (u - ns - 1)]);
      } else {
        throw Error("transport: unexpected arc on augmenting path");
      }
      v = u;
    }
    for (std::size_t v = snk; v != src;) {
      const std::size_t u = prev[v];
      if (u == src) {
        rem_s[v - 1] -= push;
      } else if (v == snk) {
        rem_d[u - ns - 1] -= push;
      } else if (u <= ns) {
        flow[(u - 1) * nd + (v - ns - 1)] += push;
      } else {
        flow[(v - 1) * nd + (u - ns - 1)] -= push;
      }
      v = u;
    }
    remaining -= push;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < flow.size(); ++k) total += flow[k] * c[k];
  return total;
}

}  // namespace crossdiff
