#include <gtest/gtest.h>

#include <stdexcept>
#include <vector>

#include "jumphedge/parallel.hpp"

using namespace jumphedge;

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (unsigned threads : {1u, 3u, 8u}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) EXPECT_EQ(h, 1);
    }
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
    for (unsigned threads : {1u, 4u}) {
        try {
            parallel_for(500, threads, [](std::size_t i) {
                if (i == 377 || i == 123 || i == 499) throw std::runtime_error(std::to_string(i));
            });
            FAIL() << "expected an exception";
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "123");
        }
    }
}

TEST(ParallelFor, EmptyRange) {
    int calls = 0;
    parallel_for(0, 4, [&](std::size_t) { ++calls; });
    EXPECT_EQ(calls, 0);
}

TEST(MeanAccumulator, MatchesTwoPassFormulas) {
    std::vector<double> xs{1.5, -2.0, 3.25, 0.0, 7.0, 2.5};
    MeanAccumulator acc;
    for (double x : xs) acc.add(x);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= xs.size() - 1;
    EXPECT_NEAR(acc.mean(), mean, 1e-14);
    EXPECT_NEAR(acc.variance(), var, 1e-13);
    EXPECT_NEAR(acc.std_error(), std::sqrt(var / xs.size()), 1e-14);
    EXPECT_EQ(acc.count(), xs.size());
}

TEST(MeanAccumulator, SingleValueHasNoSpread) {
    MeanAccumulator acc;
    acc.add(4.0);
    EXPECT_EQ(acc.std_error(), 0.0);
}
