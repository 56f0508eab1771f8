mod common;

use cardiofocus::features::{motion_energy, TemporalSobel};
use cardiofocus::focus::{energy_center, focus_from_features, rbf_field, threshold_mask, FocusConfig};
use cardiofocus::metrics::{dice, recall};
use cardiofocus::phantom::{generate, PhantomSpec};
use cardiofocus::roi::box_around;
use cardiofocus::tensor::{
    convolve3, normalize, quantile, Boundary, Coord, Dims3, Dims4, Kernel, Mask4D, Spacing, Volume3D, Volume4D,
};
use cardiofocus::FeatureMaps;
use proptest::prelude::*;

fn dims3(max: usize) -> impl Strategy<Value = Dims3> {
    (1..=max, 1..=max, 1..=max).prop_map(|(z, y, x)| Dims3::new(z, y, x))
}

fn volume3(max: usize, lo: f32, hi: f32) -> impl Strategy<Value = Volume3D> {
    dims3(max).prop_flat_map(move |d| {
        prop::collection::vec(lo..hi, d.len()).prop_map(move |data| Volume3D::new(d, data).unwrap())
    })
}

fn mask_pair(n: usize) -> impl Strategy<Value = (Mask4D, Mask4D)> {
    let d = Dims4::new(1, 1, 1, n);
    (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n))
        .prop_map(move |(a, b)| (Mask4D::new(d, a).unwrap(), Mask4D::new(d, b).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_ignores_affine_maps(
        mut vals in prop::collection::vec(-1.0f32..1.0, 2..64),
        a in 0.5f32..20.0,
        b in -10.0f32..10.0,
    ) {
        vals[0] = -1.0;
        vals[1] = 1.0;
        let d = Dims4::new(1, 1, 1, vals.len());
        let v = Volume4D::new(d, Spacing::default(), vals.clone()).unwrap();
        let w = Volume4D::new(d, Spacing::default(), vals.iter().map(|&x| a * x + b).collect()).unwrap();
        let (nv, nw) = (normalize(&v, 1e-7).unwrap(), normalize(&w, 1e-7).unwrap());
        for (x, y) in nv.data().iter().zip(nw.data()) {
            prop_assert!((x - y).abs() < 1e-5, "{x} vs {y}");
            prop_assert!(*x > 0.0 && *x <= 1.0);
        }
    }

    #[test]
    fn quantile_is_a_member(vals in prop::collection::vec(-100.0f32..100.0, 1..80), p in 0.0f64..=1.0) {
        let q = quantile(&vals, p).unwrap();
        prop_assert!(vals.contains(&q));
    }

    // Zero padding adds an implicit 0 sample, so only the value-preserving
    // boundaries are checked.
    #[test]
    fn averaging_kernels_stay_in_range(v in volume3(7, -3.0, 3.0), raw in prop::collection::vec(0.0f64..1.0, 27)) {
        let d = v.dims();
        let odd = |n: usize| if n >= 3 { 3 } else { 1 };
        let kd = [odd(d.z), odd(d.y), odd(d.x)];
        let n: usize = kd.iter().product();
        let sum: f64 = raw[..n].iter().sum::<f64>() + 1e-9;
        let w: Vec<f64> = raw[..n].iter().map(|x| (x + 1e-9 / n as f64) / sum).collect();
        let k = Kernel::new3(kd, w).unwrap();
        let (lo, hi) = v.min_max();
        for b in [Boundary::Replicate, Boundary::Periodic] {
            let out = convolve3(&v, &k, b).unwrap();
            let (olo, ohi) = out.min_max();
            prop_assert!(olo >= lo - 1e-5 && ohi <= hi + 1e-5);
        }
    }

    #[test]
    fn motion_energy_ignores_offsets(
        t in 3usize..7,
        vals in prop::collection::vec(0.0f32..1.0, 7 * 12),
        c in -1.0f32..1.0,
    ) {
        let d = Dims4::new(t, 1, 3, 4);
        let data = vals[..d.len()].to_vec();
        let v = Volume4D::new(d, Spacing::default(), data.clone()).unwrap();
        let w = Volume4D::new(d, Spacing::default(), data.iter().map(|x| x + c).collect()).unwrap();
        let s = TemporalSobel::default();
        let (a, b) = (motion_energy(&v, &s).unwrap(), motion_energy(&w, &s).unwrap());
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() < 1e-6);
            prop_assert!(*x >= 0.0);
        }
    }

    #[test]
    fn motion_energy_commutes_with_axis_swap(vals in prop::collection::vec(-1.0f32..1.0, 5 * 2 * 3 * 4)) {
        let d = Dims4::new(5, 2, 3, 4);
        let v = Volume4D::new(d, Spacing::default(), vals).unwrap();
        let swapped = Volume4D::from_fn(Dims4::new(5, 2, 4, 3), Spacing::default(), |t, z, y, x| v.get(t, z, x, y)).unwrap();
        let s = TemporalSobel::default();
        let (a, b) = (motion_energy(&v, &s).unwrap(), motion_energy(&swapped, &s).unwrap());
        for z in 0..2 {
            for y in 0..3 {
                for x in 0..4 {
                    prop_assert_eq!(a.get(z, y, x), b.get(z, x, y));
                }
            }
        }
    }

    #[test]
    fn energy_center_follows_translation(
        blob in prop::collection::vec(0.01f32..1.0, 27),
        off in (0usize..5, 0usize..5, 0usize..5),
    ) {
        let d = Dims3::new(8, 8, 8);
        let place = |oz: usize, oy: usize, ox: usize| {
            Volume3D::from_fn(d, |z, y, x| {
                let (lz, ly, lx) = (z as isize - oz as isize, y as isize - oy as isize, x as isize - ox as isize);
                if (0..3).contains(&lz) && (0..3).contains(&ly) && (0..3).contains(&lx) {
                    blob[(lz * 9 + ly * 3 + lx) as usize]
                } else {
                    0.0
                }
            })
            .unwrap()
        };
        let a = energy_center(&place(0, 0, 0)).unwrap();
        let b = energy_center(&place(off.0, off.1, off.2)).unwrap();
        prop_assert!((b.x - a.x - off.2 as f64).abs() < 1e-6);
        prop_assert!((b.y - a.y - off.1 as f64).abs() < 1e-6);
        prop_assert!((b.z - a.z - off.0 as f64).abs() < 1e-6);
    }

    #[test]
    fn rbf_decreases_with_distance(
        d in dims3(9),
        c in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        scale in 0.05f64..2.0,
    ) {
        let r = d.r_max();
        let center = Coord::new(c.0 * (d.x - 1) as f64, c.1 * (d.y - 1) as f64, c.2 * (d.z - 1) as f64);
        let f = rbf_field(d, center, scale, r).unwrap();
        let mut pts: Vec<(f64, f32)> = (0..d.len())
            .map(|i| {
                let (z, y, x) = d.coords(i);
                let q = Coord::new(
                    (x as f64 - center.x) / r.x,
                    (y as f64 - center.y) / r.y,
                    (z as f64 - center.z) / r.z,
                );
                (q.norm(), f.data()[i])
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-7);
        }
        prop_assert!(pts.iter().all(|p| p.1 > 0.0 && p.1 <= 1.0));
        let (nz, ny, nx) = center.nearest_voxel(d);
        let peak = f.get(nz, ny, nx);
        prop_assert!(f.data().iter().all(|&v| v <= peak));
    }

    #[test]
    fn dice_symmetric_and_bounded((a, b) in mask_pair(40)) {
        let (ab, ba) = (dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab == 1.0, a == b);
        let subset = a.data().iter().zip(b.data()).all(|(&y, &p)| !y || p);
        prop_assert_eq!(recall(&a, &b).unwrap() == 1.0, subset);
        let inter = a.data().iter().zip(b.data()).filter(|(&y, &p)| y && p).count();
        prop_assert!(2 * inter <= a.count() + b.count());
    }

    #[test]
    fn larger_k_encloses_smaller(
        d in dims3(40),
        c in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        scale in 0.01f64..1.0,
        k1 in 0.05f64..3.0,
        dk in 0.0f64..3.0,
    ) {
        let center = Coord::new(c.0 * (d.x - 1) as f64, c.1 * (d.y - 1) as f64, c.2 * (d.z - 1) as f64);
        let small = box_around(center, scale, d, k1).unwrap();
        let large = box_around(center, scale, d, k1 + dk).unwrap();
        prop_assert!(large.encloses(&small));
        let (z, y, x) = center.nearest_voxel(d);
        prop_assert!(small.contains(z, y, x));
    }

    #[test]
    fn phantom_mask_matches_radius_test(
        seed in any::<u64>(),
        cx in 20.0f64..44.0,
        cy in 20.0f64..44.0,
        t in 4usize..9,
    ) {
        let spec = PhantomSpec {
            dims: Dims4::new(t, 4, 64, 64),
            center: Coord::new(cx, cy, 2.0),
            seed,
            ..PhantomSpec::default()
        };
        let out = generate(&spec).unwrap();
        let d = spec.dims;
        for ti in 0..d.t {
            for z in 0..d.z {
                let (inner, outer) = spec.radii(ti, z);
                let mut want = 0;
                for y in 0..d.y {
                    for x in 0..d.x {
                        let rho = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                        want += (rho >= inner && rho < outer) as usize;
                    }
                }
                let got = out.mask.slice(ti, z).iter().filter(|&&b| b).count();
                prop_assert_eq!(got, want);
            }
        }
    }
}

#[test]
fn recall_is_not_symmetric() {
    let d = Dims4::new(1, 1, 1, 4);
    let y = Mask4D::new(d, vec![true, false, false, false]).unwrap();
    let p = Mask4D::new(d, vec![true, true, true, false]).unwrap();
    assert_eq!(recall(&y, &p).unwrap(), 1.0);
    assert!((recall(&p, &y).unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn phantom_histogram_is_trimodal() {
    // noise 0.05 is below half of the smallest gap between levels
    let spec = PhantomSpec { noise: 0.05, seed: 4, ..PhantomSpec::default() };
    let v = generate(&spec).unwrap().volume;
    let mut bins = [0usize; 20];
    for &x in v.data() {
        bins[((x.clamp(0.0, 0.999)) * 20.0) as usize] += 1;
    }
    let peaks: Vec<usize> = (0..20)
        .filter(|&i| {
            let left = if i == 0 { 0 } else { bins[i - 1] };
            let right = if i == 19 { 0 } else { bins[i + 1] };
            bins[i] > left && bins[i] >= right && bins[i] > v.data().len() / 100
        })
        .collect();
    assert_eq!(peaks.len(), 3, "{bins:?}");
    for (p, level) in peaks.iter().zip([spec.background, spec.myocardium, spec.blood]) {
        assert!(((*p as f32 + 0.5) / 20.0 - level).abs() <= 0.1, "peak {p} vs level {level}");
    }
}

fn random_features(seed: u64, d: Dims3) -> FeatureMaps {
    let mut r = common::rng(seed);
    let mut map = || common::random_volume3(&mut r, d).map(|x| x.abs());
    FeatureMaps {
        mean: map(),
        std: map(),
        motion: map(),
        static_frame: Default::default(),
        clamped: 0,
    }
}

#[test]
fn scaling_fused_map_leaves_focus_unchanged() {
    let d = Dims3::new(6, 9, 11);
    for seed in 0..20 {
        let v = common::random_volume3(&mut common::rng(seed), d).map(|x| x.abs() + 1e-3);
        let c = energy_center(&v).unwrap();
        let (m, _) = threshold_mask(&v, 0.9).unwrap();
        for s in [0.25f32, 2.0, 1024.0] {
            let w = v.map(|x| x * s);
            assert_eq!(energy_center(&w).unwrap(), c);
            assert_eq!(threshold_mask(&w, 0.9).unwrap().0, m);
        }
        // other factors round each f32 product, so only approximate equality holds
        let w = v.map(|x| x * 3.7);
        let cw = energy_center(&w).unwrap();
        assert!(cw.distance(&c) < 1e-6);
        // focus on random features is deterministic
        let maps = random_features(seed, d);
        let cfg = FocusConfig { smooth_sigma: 1.0, ..FocusConfig::default() };
        assert_eq!(focus_from_features(&maps, &cfg).unwrap(), focus_from_features(&maps, &cfg).unwrap());
    }
}
