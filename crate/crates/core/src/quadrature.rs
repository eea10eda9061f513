//! Globally adaptive 21-point Gauss-Kronrod integration on a finite interval
//! with caller-supplied breakpoints.

// Abscissae of the 21-point Kronrod rule on [-1, 1] (non-negative half).
// Odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_581_290_184_380,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule: the summed error estimate must fall below the largest of
/// `absolute`, `relative·|I|` and `magnitude·∫|f|`. The last form is an
/// absolute tolerance scaled to the integrand, for results that cross zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub magnitude: f64,
    pub absolute: f64,
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self {
            relative,
            magnitude: 0.0,
            absolute: 0.0,
        }
    }

    pub fn with_magnitude(self, magnitude: f64) -> Self {
        Self { magnitude, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    /// Integral of |f|, for absolute tolerances near zeros of the result.
    pub abs_value: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut kronrod = WGK[10] * f_center;
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut lower = [0.0; 10];
    let mut upper = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        lower[j] = f1;
        upper[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((lower[j] - mean).abs() + (upper[j] - mean).abs());
    }
    let scale = half.abs();
    let error = rescale_error((kronrod - gauss) * half, res_abs * scale, res_asc * scale);
    Segment {
        a,
        b,
        value: kronrod * half,
        error,
        abs_value: res_abs * scale,
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// partition given by the sorted `points` and bisecting the segment with the
/// largest error estimate until the total error satisfies `tol`.
///
/// On failure to converge within `max_segments`, returns the best estimate as
/// the error value.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> Result<Integral, Integral> {
    assert!(points.len() >= 2, "need at least two integration limits");
    let mut segments: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();

    let summarize = |segments: &[Segment]| Integral {
        value: segments.iter().map(|s| s.value).sum(),
        abs_error: segments.iter().map(|s| s.error).sum(),
        abs_value: segments.iter().map(|s| s.abs_value).sum(),
        intervals: segments.len(),
    };

    loop {
        let total = summarize(&segments);
        let target = tol
            .absolute
            .max(tol.relative * total.value.abs())
            .max(tol.magnitude * total.abs_value);
        if total.abs_error <= target {
            return Ok(total);
        }
        if segments.len() >= max_segments {
            return Err(total);
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty partition");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Segment can no longer be split in floating point.
            return Err(total);
        }
        segments.push(gauss_kronrod(&f, seg.a, mid));
        segments.push(gauss_kronrod(&f, mid, seg.b));
    }
}
