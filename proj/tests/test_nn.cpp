#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "boldseg/nn.hpp"
#include "boldseg/rng.hpp"
#include "helpers.hpp"

using namespace boldseg;

namespace {

// Scalar objective sum(r * out) with fixed random coefficients: its gradient
// with respect to out is r, which seeds every layer's backward pass.
std::vector<double> random_coeffs(std::size_t n, RngStream& rng) {
    std::vector<double> r(n);
    for (auto& v : r) v = rng.normal();
    return r;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Tensor<double> random_tensor(int n, int c, int x, int y, int z, RngStream& rng) {
    Tensor<double> t(n, c, x, y, z);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

}  // namespace

TEST(Conv3d, CenterTapIdentityAndShift) {
    Conv3d<double> conv(1, 1, 3);
    conv.w[conv.widx(0, 0, 1, 1, 1)] = 1.0;
    RngStream rng(601);
    Tensor<double> in = random_tensor(1, 1, 4, 3, 3, rng), out;
    conv.forward(in, out);
    for (std::size_t i = 0; i < in.data.size(); ++i) EXPECT_DOUBLE_EQ(out.data[i], in.data[i]);

    // A single off-center tap shifts the field; zero padding fills the edge.
    Conv3d<double> shift(1, 1, 3);
    shift.w[shift.widx(0, 0, 1, 1, 0)] = 1.0;  // kx=0 reads in(ox-1)
    shift.forward(in, out);
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 3; ++y) {
            EXPECT_DOUBLE_EQ(out.at(0, 0, 0, y, z), 0.0);
            for (int x = 1; x < 4; ++x)
                EXPECT_DOUBLE_EQ(out.at(0, 0, x, y, z), in.at(0, 0, x - 1, y, z));
        }
}

TEST(Conv3d, BiasAddsUniformly) {
    Conv3d<double> conv(1, 2, 1);
    conv.w[conv.widx(0, 0, 0, 0, 0)] = 2.0;
    conv.w[conv.widx(1, 0, 0, 0, 0)] = -1.0;
    conv.b[0] = 0.25;
    conv.b[1] = 3.0;
    RngStream rng(602);
    Tensor<double> in = random_tensor(2, 1, 3, 3, 2, rng), out;
    conv.forward(in, out);
    for (int n = 0; n < 2; ++n)
        for (int z = 0; z < 2; ++z)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 3; ++x) {
                    EXPECT_DOUBLE_EQ(out.at(n, 0, x, y, z), 2.0 * in.at(n, 0, x, y, z) + 0.25);
                    EXPECT_DOUBLE_EQ(out.at(n, 1, x, y, z), -in.at(n, 0, x, y, z) + 3.0);
                }
}

TEST(Conv3d, GradientsMatchFiniteDifference) {
    RngStream rng(603);
    Conv3d<double> conv(2, 3, 3);
    conv.init_he(rng);
    for (auto& v : conv.b) v = rng.normal(0.0, 0.5);
    Tensor<double> in = random_tensor(2, 2, 3, 4, 3, rng);
    Tensor<double> out, gout, gin;
    conv.forward(in, out);
    auto r = random_coeffs(out.data.size(), rng);
    gout = out;
    gout.data = r;
    conv.backward(gout, gin);
    std::vector<double> gw = conv.gw, gb = conv.gb;
    std::vector<double> w0 = conv.w, b0 = conv.b;

    auto f_in = [&](const std::vector<double>& xd) {
        Tensor<double> x = in, o;
        x.data = xd;
        conv.forward(x, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_in, in.data, gin.data), 1e-7);

    auto f_w = [&](const std::vector<double>& wd) {
        conv.w = wd;
        Tensor<double> o;
        conv.forward(in, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_w, w0, gw), 1e-7);
    conv.w = w0;

    auto f_b = [&](const std::vector<double>& bd) {
        conv.b = bd;
        Tensor<double> o;
        conv.forward(in, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_b, b0, gb), 1e-7);
}

TEST(Conv3d, RegistersWeightAndBias) {
    Conv3d<double> conv(1, 1, 3);
    std::vector<ParamRef<double>> params;
    conv.register_into("enc0.conv1", params);
    ASSERT_EQ(params.size(), 2u);
    EXPECT_EQ(params[0].name, "enc0.conv1.w");
    EXPECT_EQ(params[0].value, &conv.w);
    EXPECT_EQ(params[0].grad, &conv.gw);
    EXPECT_EQ(params[1].name, "enc0.conv1.b");
}

TEST(BatchNorm3d, TrainForwardNormalizesBatch) {
    RngStream rng(604);
    BatchNorm3d<double> bn(2);
    bn.gamma = {2.0, 0.5};
    bn.beta = {1.0, -3.0};
    Tensor<double> in = random_tensor(3, 2, 2, 2, 2, rng), out;
    bn.forward(in, out, true);
    std::size_t vox = in.voxels();
    double m = 3.0 * vox;
    for (int ch = 0; ch < 2; ++ch) {
        double mean = 0.0, var = 0.0;
        for (int n = 0; n < 3; ++n)
            for (std::size_t i = 0; i < vox; ++i) mean += in.slab(n, ch)[i];
        mean /= m;
        for (int n = 0; n < 3; ++n)
            for (std::size_t i = 0; i < vox; ++i) {
                double d = in.slab(n, ch)[i] - mean;
                var += d * d;
            }
        var /= m;  // biased
        double inv_std = 1.0 / std::sqrt(var + 1e-5);
        for (int n = 0; n < 3; ++n)
            for (std::size_t i = 0; i < vox; ++i) {
                double expect = bn.gamma[ch] * (in.slab(n, ch)[i] - mean) * inv_std + bn.beta[ch];
                EXPECT_NEAR(out.slab(n, ch)[i], expect, 1e-12);
            }
    }
}

TEST(BatchNorm3d, RunningStatsKeepNinetyPercentOfOld) {
    BatchNorm3d<double> bn(1);
    Tensor<double> in(1, 1, 2, 2, 2);
    for (auto& v : in.data) v = 4.0;
    Tensor<double> out;
    bn.forward(in, out, true);  // batch mean 4, var 0
    EXPECT_NEAR(bn.running_mean[0], 0.4, 1e-12);
    EXPECT_NEAR(bn.running_var[0], 0.9, 1e-12);
    bn.forward(in, out, true);
    EXPECT_NEAR(bn.running_mean[0], 0.9 * 0.4 + 0.4, 1e-12);
    EXPECT_NEAR(bn.running_var[0], 0.9 * 0.9, 1e-12);
}

TEST(BatchNorm3d, EvalIsAffineFromRunningStats) {
    BatchNorm3d<double> bn(1);
    bn.running_mean = {2.0};
    bn.running_var = {4.0};
    bn.gamma = {3.0};
    bn.beta = {1.0};
    RngStream rng(605);
    Tensor<double> in = random_tensor(2, 1, 2, 3, 2, rng), out;
    bn.forward(in, out, false);
    double inv_std = 1.0 / std::sqrt(4.0 + 1e-5);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        EXPECT_NEAR(out.data[i], 3.0 * (in.data[i] - 2.0) * inv_std + 1.0, 1e-12);
    // Eval mode leaves the running statistics alone.
    EXPECT_DOUBLE_EQ(bn.running_mean[0], 2.0);
    EXPECT_DOUBLE_EQ(bn.running_var[0], 4.0);
}

TEST(BatchNorm3d, TrainGradientsMatchFiniteDifference) {
    RngStream rng(606);
    BatchNorm3d<double> bn(2);
    bn.gamma = {1.3, 0.7};
    bn.beta = {0.2, -0.4};
    Tensor<double> in = random_tensor(2, 2, 2, 2, 3, rng);
    Tensor<double> out, gout, gin;
    bn.forward(in, out, true);
    auto r = random_coeffs(out.data.size(), rng);
    gout = out;
    gout.data = r;
    bn.backward(gout, gin);
    std::vector<double> gg = bn.ggamma, gb = bn.gbeta;

    auto f_in = [&](const std::vector<double>& xd) {
        Tensor<double> x = in, o;
        x.data = xd;
        bn.forward(x, o, true);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_in, in.data, gin.data), 1e-6);

    auto f_gamma = [&](const std::vector<double>& g) {
        bn.gamma = g;
        Tensor<double> o;
        bn.forward(in, o, true);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_gamma, {1.3, 0.7}, gg), 1e-7);
    bn.gamma = {1.3, 0.7};

    auto f_beta = [&](const std::vector<double>& b) {
        bn.beta = b;
        Tensor<double> o;
        bn.forward(in, o, true);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_beta, {0.2, -0.4}, gb), 1e-7);
}

TEST(BatchNorm3d, EvalGradientsMatchFiniteDifference) {
    RngStream rng(607);
    BatchNorm3d<double> bn(1);
    bn.running_mean = {0.5};
    bn.running_var = {2.0};
    bn.gamma = {1.5};
    Tensor<double> in = random_tensor(1, 1, 2, 2, 2, rng);
    Tensor<double> out, gout, gin;
    bn.forward(in, out, false);
    auto r = random_coeffs(out.data.size(), rng);
    gout = out;
    gout.data = r;
    bn.backward(gout, gin);
    auto f_in = [&](const std::vector<double>& xd) {
        Tensor<double> x = in, o;
        x.data = xd;
        bn.forward(x, o, false);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_in, in.data, gin.data), 1e-8);
}

TEST(ReLU, ForwardClampsAndGradientMasks) {
    ReLU<double> relu;
    Tensor<double> in(1, 1, 2, 2, 1), out, gout, gin;
    in.data = {-1.0, 2.0, 0.0, -0.5};
    relu.forward(in, out);
    EXPECT_EQ(out.data, (std::vector<double>{0.0, 2.0, 0.0, 0.0}));
    gout = out;
    gout.data = {10.0, 20.0, 30.0, 40.0};
    relu.backward(gout, gin);
    EXPECT_EQ(gin.data, (std::vector<double>{0.0, 20.0, 0.0, 0.0}));
}

TEST(ReLU, GradientsMatchFiniteDifferenceAwayFromKink) {
    RngStream rng(608);
    ReLU<double> relu;
    Tensor<double> in(1, 2, 3, 2, 2);
    for (auto& v : in.data) {
        v = rng.normal();
        if (std::abs(v) < 0.05) v = 0.1;  // keep clear of the kink
    }
    Tensor<double> out, gout, gin;
    relu.forward(in, out);
    auto r = random_coeffs(out.data.size(), rng);
    gout = out;
    gout.data = r;
    relu.backward(gout, gin);
    auto f = [&](const std::vector<double>& xd) {
        Tensor<double> x = in, o;
        x.data = xd;
        relu.forward(x, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f, in.data, gin.data), 1e-9);
}

TEST(MaxPool2, ForwardPicksWindowMax) {
    MaxPool2<double> pool;
    Tensor<double> in(1, 1, 4, 2, 2), out;
    for (std::size_t i = 0; i < in.data.size(); ++i) in.data[i] = static_cast<double>(i);
    pool.forward(in, out);
    EXPECT_EQ(out.x, 2);
    EXPECT_EQ(out.y, 1);
    EXPECT_EQ(out.z, 1);
    // Highest flat index in each window wins here since values increase.
    EXPECT_DOUBLE_EQ(out.at(0, 0, 0, 0, 0), in.at(0, 0, 1, 1, 1));
    EXPECT_DOUBLE_EQ(out.at(0, 0, 1, 0, 0), in.at(0, 0, 3, 1, 1));
}

TEST(MaxPool2, TieRoutesToFirstInScanOrder) {
    MaxPool2<double> pool;
    Tensor<double> in(1, 1, 2, 2, 2), out, gout, gin;
    for (auto& v : in.data) v = 7.0;  // all tied
    pool.forward(in, out);
    gout = out;
    gout.data = {5.0};
    pool.backward(gout, gin);
    EXPECT_DOUBLE_EQ(gin.at(0, 0, 0, 0, 0), 5.0);
    double rest = 0.0;
    for (std::size_t i = 1; i < gin.data.size(); ++i) rest += std::abs(gin.data[i]);
    EXPECT_DOUBLE_EQ(rest, 0.0);

    // Tie between (x=1,y=0) and (x=0,y=1): x varies fastest, so the former wins.
    Tensor<double> in2(1, 1, 2, 2, 2), out2, gin2;
    in2.data.assign(8, 0.0);
    in2.at(0, 0, 1, 0, 0) = 9.0;
    in2.at(0, 0, 0, 1, 0) = 9.0;
    pool.forward(in2, out2);
    Tensor<double> gout2 = out2;
    gout2.data = {1.0};
    pool.backward(gout2, gin2);
    EXPECT_DOUBLE_EQ(gin2.at(0, 0, 1, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(gin2.at(0, 0, 0, 1, 0), 0.0);
}

TEST(MaxPool2, RejectsOddDims) {
    MaxPool2<double> pool;
    Tensor<double> in(1, 1, 3, 4, 4), out;
    EXPECT_THROW(pool.forward(in, out), Error);
}

TEST(MaxPool2, GradientsMatchFiniteDifference) {
    RngStream rng(609);
    MaxPool2<double> pool;
    Tensor<double> in = random_tensor(2, 2, 4, 2, 2, rng);
    Tensor<double> out, gout, gin;
    pool.forward(in, out);
    auto r = random_coeffs(out.data.size(), rng);
    gout = out;
    gout.data = r;
    pool.backward(gout, gin);
    auto f = [&](const std::vector<double>& xd) {
        MaxPool2<double> p2;
        Tensor<double> x = in, o;
        x.data = xd;
        p2.forward(x, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f, in.data, gin.data), 1e-9);
}

TEST(TConv2, ForwardPlacesOneTapPerOutputVoxel) {
    TConv2<double> up(1, 1);
    for (int kz = 0; kz < 2; ++kz)
        for (int ky = 0; ky < 2; ++ky)
            for (int kx = 0; kx < 2; ++kx)
                up.w[up.widx(0, 0, kz, ky, kx)] = 100 * kz + 10 * ky + kx;
    up.b[0] = 0.5;
    Tensor<double> in(1, 1, 1, 1, 1), out;
    in.data = {3.0};
    up.forward(in, out);
    EXPECT_EQ(out.x, 2);
    EXPECT_EQ(out.y, 2);
    EXPECT_EQ(out.z, 2);
    for (int kz = 0; kz < 2; ++kz)
        for (int ky = 0; ky < 2; ++ky)
            for (int kx = 0; kx < 2; ++kx)
                EXPECT_DOUBLE_EQ(out.at(0, 0, kx, ky, kz), 3.0 * (100 * kz + 10 * ky + kx) + 0.5);
}

TEST(TConv2, GradientsMatchFiniteDifference) {
    RngStream rng(610);
    TConv2<double> up(3, 2);
    up.init_he(rng);
    for (auto& v : up.b) v = rng.normal(0.0, 0.5);
    Tensor<double> in = random_tensor(2, 3, 2, 2, 2, rng);
    Tensor<double> out, gout, gin;
    up.forward(in, out);
    auto r = random_coeffs(out.data.size(), rng);
    gout = out;
    gout.data = r;
    up.backward(gout, gin);
    std::vector<double> gw = up.gw, gb = up.gb;
    std::vector<double> w0 = up.w, b0 = up.b;

    auto f_in = [&](const std::vector<double>& xd) {
        Tensor<double> x = in, o;
        x.data = xd;
        up.forward(x, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_in, in.data, gin.data), 1e-7);

    auto f_w = [&](const std::vector<double>& wd) {
        up.w = wd;
        Tensor<double> o;
        up.forward(in, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_w, w0, gw), 1e-7);
    up.w = w0;

    auto f_b = [&](const std::vector<double>& bd) {
        up.b = bd;
        Tensor<double> o;
        up.forward(in, o);
        return dot(r, o.data);
    };
    EXPECT_LT(testutil::gradcheck(f_b, b0, gb), 1e-7);
}

TEST(SigmoidLayer, ForwardValuesAndGradcheck) {
    Sigmoid<double> sig;
    Tensor<double> in(1, 1, 3, 1, 1), out;
    in.data = {0.0, 100.0, -100.0};
    sig.forward(in, out);
    EXPECT_DOUBLE_EQ(out.data[0], 0.5);
    EXPECT_NEAR(out.data[1], 1.0, 1e-12);
    EXPECT_NEAR(out.data[2], 0.0, 1e-12);

    RngStream rng(611);
    Tensor<double> x = random_tensor(1, 2, 2, 2, 2, rng), o, gout, gin;
    sig.forward(x, o);
    auto r = random_coeffs(o.data.size(), rng);
    gout = o;
    gout.data = r;
    sig.backward(gout, gin);
    auto f = [&](const std::vector<double>& xd) {
        Tensor<double> t = x, oo;
        t.data = xd;
        sig.forward(t, oo);
        return dot(r, oo.data);
    };
    EXPECT_LT(testutil::gradcheck(f, x.data, gin.data), 1e-8);
}

TEST(ChannelOps, ConcatThenSplitRoundTrips) {
    RngStream rng(612);
    Tensor<double> a = random_tensor(2, 3, 2, 2, 2, rng);
    Tensor<double> b = random_tensor(2, 2, 2, 2, 2, rng);
    Tensor<double> cab, ga, gb;
    concat_channels(a, b, cab);
    EXPECT_EQ(cab.c, 5);
    for (int n = 0; n < 2; ++n)
        for (std::size_t i = 0; i < a.voxels(); ++i) {
            EXPECT_DOUBLE_EQ(cab.slab(n, 1)[i], a.slab(n, 1)[i]);
            EXPECT_DOUBLE_EQ(cab.slab(n, 3)[i], b.slab(n, 0)[i]);
        }
    split_channels(cab, 3, ga, gb);
    EXPECT_EQ(ga.data, a.data);
    EXPECT_EQ(gb.data, b.data);

    Tensor<double> mismatch(2, 2, 3, 2, 2);
    EXPECT_THROW(concat_channels(a, mismatch, cab), Error);
}
