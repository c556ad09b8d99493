mod common;

use common::{argmax_in, oracle_fwhm, oracle_fwhm_near};
use octdisp::dispersion::DispersionCoefficients as C;
use octdisp::recon::ReconstructionConfig;
use octdisp::sim::*;
use octdisp::*;

fn desk() -> WavenumberGrid {
    GridSpec::desk().build().unwrap()
}

fn cfg(grid: &WavenumberGrid) -> ReconstructionConfig {
    ReconstructionConfig::with_reference(reference_spectrum(&SourceSpec::default(), grid, Domain::Wavelength))
}

#[test]
fn transform_limit_formula() {
    let s = SourceSpec { center_wavelength_um: 0.840, fwhm_bandwidth_um: 0.045, ..Default::default() };
    let w = transform_limited_fwhm(&s);
    assert!((w - 6.92).abs() < 0.005, "{w}");
    let wide = SourceSpec { fwhm_bandwidth_um: 0.090, ..s };
    assert!((transform_limited_fwhm(&wide) - w / 2.0).abs() < 1e-12);
    let red = SourceSpec { center_wavelength_um: 1.680, ..s };
    assert!((transform_limited_fwhm(&red) - 4.0 * w).abs() < 1e-12);
}

#[test]
fn default_grid_geometry() {
    let g = GridSpec::default().build().unwrap();
    assert_eq!((g.n_k(), g.n_z()), (2048, 1024));
    assert!((g.axial_pixel_um() - 1.5).abs() < 1e-12);
    let ks = g.k_uniform();
    let dk = ks[1] - ks[0];
    assert!(ks.windows(2).all(|w| ((w[1] - w[0]) / dk - 1.0).abs() < 1e-9));
    assert!(g.u(g.n_k() / 2).abs() <= 2.0 / g.n_k() as f64);
    assert!((g.u(0) + 1.0).abs() < 1e-12 && (g.u(g.n_k() - 1) - 1.0).abs() < 1e-12);
}

#[test]
fn fringes_are_linear_in_layers() {
    let grid = desk();
    let pix = grid.axial_pixel_um();
    let src = SourceSpec::default();
    let a = PhantomLayer::new(50.0 * pix, 0.3, 12.0);
    let b = PhantomLayer::new(130.0 * pix, 0.2, 35.0);
    let both = synthesize_fringes(&Phantom::new(vec![a, b], 4), &src, &grid, Domain::Wavelength).unwrap();
    let fa = synthesize_fringes(&Phantom::new(vec![a], 4), &src, &grid, Domain::Wavelength).unwrap();
    let fb = synthesize_fringes(&Phantom::new(vec![b], 4), &src, &grid, Domain::Wavelength).unwrap();
    for ((x, y), z) in both.iter().zip(fa.iter()).zip(fb.iter()) {
        assert!((x - (y + z)).abs() < 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn faint_phantom_is_nearly_background() {
    let grid = desk();
    let p = Phantom::single(100.0 * grid.axial_pixel_um(), 1e-9, 0.0, 2);
    let f = synthesize_spectrogram(&p, &SourceSpec::default(), &NoiseSpec::none(), &grid, Domain::Wavelength).unwrap();
    let reference = reference_spectrum(&SourceSpec::default(), &grid, Domain::Wavelength);
    for (r, v) in reference.iter().enumerate() {
        assert!((f.data[[r, 0]] - v).abs() < 1e-5);
    }
    let b = reconstruct_bscan(&f, C::ZERO, &grid, &cfg(&grid)).unwrap();
    assert!(b.pixels.iter().all(|&v| v < 1e-5));
}

#[test]
fn single_layer_psf_at_transform_limit() {
    let grid = desk();
    let pix = grid.axial_pixel_um();
    let tl = transform_limited_fwhm(&SourceSpec::default()) / pix;
    for depth in [30.0, 77.0, 140.0] {
        let p = Phantom::single(depth * pix, 0.3, 0.0, 1);
        let f = synthesize_spectrogram(&p, &SourceSpec::default(), &NoiseSpec::none(), &grid, Domain::Wavelength).unwrap();
        let col = reconstruct_bscan(&f, C::ZERO, &grid, &cfg(&grid)).unwrap().pixels.column(0).to_vec();
        assert_eq!(argmax_in(&col, 1, grid.n_z()), depth as usize);
        let w = oracle_fwhm(&col);
        assert!((w / tl - 1.0).abs() < 0.05, "{w} vs {tl}");

        let p = Phantom::single(depth * pix, 0.3, 40.0, 1);
        let f = synthesize_spectrogram(&p, &SourceSpec::default(), &NoiseSpec::none(), &grid, Domain::Wavelength).unwrap();
        let col = reconstruct_bscan(&f, C::ZERO, &grid, &cfg(&grid)).unwrap().pixels.column(0).to_vec();
        assert!(oracle_fwhm(&col) >= 3.0 * tl);
    }
}

#[test]
fn no_single_coefficient_fits_a_ramp() {
    let grid = desk();
    let pix = grid.axial_pixel_um();
    let tl = transform_limited_fwhm(&SourceSpec::default()) / pix;
    let mut p = ramp_phantom(&grid, 10.0, 50.0, 1);
    p.lateral.tilt_px = 0.0;
    let f = synthesize_spectrogram(&p, &SourceSpec::default(), &NoiseSpec::none(), &grid, Domain::Wavelength).unwrap();
    let prepared = octdisp::recon::PreparedFrame::new(&f, &grid, &cfg(&grid)).unwrap();
    for i in 0..=60 {
        let col = prepared.image(&C::second_order(i as f64)).unwrap().pixels.column(0).to_vec();
        let worst = p
            .layers
            .iter()
            .map(|l| {
                oracle_fwhm_near(&col, (l.depth_um / pix).round() as usize) / tl
            })
            .fold(0.0, f64::max);
        assert!(worst > 1.1, "a2 = {i}: every layer within 10%");
    }
}

#[test]
fn volume_ordering_and_repeats() {
    let grid = GridSpec { n_k: 128, ..GridSpec::desk() }.build().unwrap();
    let pix = grid.axial_pixel_um();
    let phantoms: Vec<Phantom> = (0..3).map(|i| Phantom::single((10.0 + 5.0 * i as f64) * pix, 0.3, 0.0, 4)).collect();
    let noise = NoiseSpec { sigma: 1.0, seed: 42 };
    let src = SourceSpec::default();
    let v = synthesize_volume(&phantoms, &src, &noise, 4, &grid, Domain::Wavelength).unwrap();
    assert_eq!(v.len(), 12);
    for i in 0..3 {
        for j in 0..4 {
            for k in j + 1..4 {
                assert_ne!(v[4 * i + j], v[4 * i + k]);
            }
        }
    }
    assert_eq!(v, synthesize_volume(&phantoms, &src, &noise, 4, &grid, Domain::Wavelength).unwrap());
    assert_eq!(synthesize_volume(&phantoms, &src, &noise, 1, &grid, Domain::Wavelength).unwrap().len(), 3);
    assert!(synthesize_volume(&phantoms, &src, &noise, 0, &grid, Domain::Wavelength).is_err());

    // repeats average towards the noiseless frame
    let many = synthesize_volume(&phantoms[..1], &src, &NoiseSpec { sigma: 4.0, seed: 1 }, 64, &grid, Domain::Wavelength).unwrap();
    let clean = synthesize_spectrogram(&phantoms[0], &src, &NoiseSpec::none(), &grid, Domain::Wavelength).unwrap();
    let mut mean = ndarray::Array2::<f64>::zeros(clean.data.dim());
    for f in &many {
        mean += &f.data;
    }
    mean /= many.len() as f64;
    // compare where clipping at zero cannot bias the mean
    let (mut acc, mut n) = (0.0, 0.0);
    for (m, c) in mean.iter().zip(clean.data.iter()) {
        if *c > 40.0 {
            acc += (m - c) * (m - c);
            n += 1.0;
        }
    }
    let rms = (acc / n).sqrt();
    assert!(rms < 4.0 / 64f64.sqrt() * 1.3, "{rms}");
}

#[test]
fn layers_outside_depth_range_rejected() {
    let grid = desk();
    let max = grid.n_z() as f64 * grid.axial_pixel_um();
    let src = SourceSpec::default();
    for d in [max + 1.0, -3.0] {
        let p = Phantom::single(d, 0.3, 0.0, 1);
        assert!(synthesize_fringes(&p, &src, &grid, Domain::Wavelength).is_err());
    }
    let unsorted = Phantom::new(vec![PhantomLayer::new(90.0, 0.2, 0.0), PhantomLayer::new(30.0, 0.2, 0.0)], 1);
    assert!(synthesize_fringes(&unsorted, &src, &grid, Domain::Wavelength).is_err());
}

#[test]
fn ramp_geometry() {
    let grid = desk();
    let p = ramp_phantom(&grid, 10.0, 50.0, 32);
    let px: Vec<f64> = p.layers.iter().map(|l| l.depth_um / grid.axial_pixel_um()).collect();
    let expect = [32.0, 64.0, 88.0, 104.0, 128.0, 160.0];
    assert!(px.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-9));
    let a2: Vec<f64> = p.layers.iter().map(|l| l.a2_sample).collect();
    assert_eq!(a2, vec![10.0, 20.0, 27.5, 32.5, 40.0, 50.0]);
    assert_eq!(ramp_band_range(256), (16, 176));
}

#[test]
fn variation_is_deterministic() {
    let grid = desk();
    let base = ramp_phantom(&grid, 10.0, 50.0, 32);
    let v = Variation::default();
    let a = v.member(&base, 3, 11, grid.axial_pixel_um());
    assert_eq!(a, v.member(&base, 3, 11, grid.axial_pixel_um()));
    assert_ne!(a, v.member(&base, 4, 11, grid.axial_pixel_um()));
    assert_eq!(Variation::none().member(&base, 3, 11, grid.axial_pixel_um()), base);
}

#[test]
fn physical_unit_round_trip() {
    let grid = desk();
    let c = C::new(37.0, -12.0).unwrap();
    let (p2, p3) = c.to_physical(&grid);
    let back = C::from_physical(p2, p3, &grid);
    assert!((back.a2 - c.a2).abs() < 1e-9 && (back.a3 - c.a3).abs() < 1e-9);
}
