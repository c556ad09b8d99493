use ndarray::Array3;
use octdisp::dataset::*;
use octdisp::dispersion::DispersionCoefficients as C;
use octdisp::octbin::{Header, Kind, OctBin};
use octdisp::recon::ReconstructionConfig;
use octdisp::sim::*;
use octdisp::*;
use proptest::prelude::*;

fn bits(a: &Array3<f32>) -> Vec<u32> {
    a.iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn octbin_round_trip(
        dims in (1usize..4, 1usize..9, 1usize..9),
        seed in any::<u32>(),
        a2 in -200.0f64..200.0,
        pix in proptest::option::of(0.1f64..10.0),
    ) {
        let (p, r, c) = dims;
        let data = Array3::from_shape_fn((p, r, c), |(i, j, k)| {
            f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add((i * 131 + j * 17 + k) as u32 * 97))
        });
        let mut h = Header::new(Kind::Stack, [0; 3]);
        h.axial_pixel_um = pix;
        h.coefficients = vec![C::second_order(a2)];
        let f = OctBin::new(h, data);
        let back = OctBin::from_bytes(&f.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(&back.header, &f.header);
        prop_assert_eq!(bits(&back.data), bits(&f.data));
    }
}

#[test]
fn file_round_trip_and_views() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec { n_k: 64, ..GridSpec::desk() }.build().unwrap();
    let p = Phantom::single(12.0 * grid.axial_pixel_um(), 0.3, 5.0, 3);
    let frames = synthesize_volume(&[p], &SourceSpec::default(), &NoiseSpec { sigma: 1.0, seed: 2 }, 2, &grid, Domain::Wavelength).unwrap();
    let f = OctBin::from_spectrograms(&frames, Some(GridSpec { n_k: 64, ..GridSpec::desk() })).unwrap();
    let path = dir.path().join("v.octbin");
    f.write(&path).unwrap();
    let back = OctBin::read(&path).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.header.dims, [2, 64, 3]);
    let specs = back.to_spectrograms().unwrap();
    assert_eq!(specs[1].domain, Domain::Wavelength);
    assert_eq!(specs[1].data, frames[1].data.mapv(|v| v as f32 as f64));
    assert!(back.to_bscans().is_err());
    assert!(OctBin::read(&dir.path().join("missing")).is_err());
}

fn ramp_volume(grid: &WavenumberGrid, n: usize) -> Vec<Spectrogram> {
    let base = ramp_phantom(grid, 10.0, 50.0, 64);
    let phantoms: Vec<Phantom> = (0..n).map(|i| Variation::default().member(&base, i, 5, grid.axial_pixel_um())).collect();
    synthesize_volume(&phantoms, &SourceSpec::default(), &NoiseSpec { sigma: 2.0, seed: 9 }, 1, grid, Domain::Wavelength).unwrap()
}

fn options(grid: &WavenumberGrid, k: usize) -> DatasetOptions {
    let edges = band_edges(grid.n_z(), 5, Some(ramp_band_range(grid.n_z()))).unwrap();
    let coeffs: Vec<C> = [10.0, 20.0, 30.0, 40.0, 50.0].iter().map(|&a| C::second_order(a)).collect();
    DatasetOptions {
        k,
        c_lo: C::second_order(10.0),
        c_hi: C::second_order(50.0),
        gt_profile: DispersionProfile::from_edges(&edges, &coeffs).unwrap(),
        blend_px: None,
        allow_any_k: false,
        seed: Some(9),
        phantom_hash: Some("abc".into()),
        grid_spec: Some(GridSpec::desk()),
    }
}

#[test]
fn dataset_emission_round_trips() {
    let grid = GridSpec::desk().build().unwrap();
    let cfg = ReconstructionConfig::with_reference(reference_spectrum(&SourceSpec::default(), &grid, Domain::Wavelength));
    let frames = ramp_volume(&grid, 8);
    let dir = tempfile::tempdir().unwrap();
    let m = emit_dataset(&frames, &grid, &cfg, &options(&grid, 5), dir.path()).unwrap();
    assert_eq!(m.frame_count, 8);
    assert_eq!(std::fs::read_dir(dir.path().join("frames")).unwrap().count(), 16);
    assert!(dir.path().join("manifest.json").exists());
    assert_eq!(DatasetManifest::load(dir.path()).unwrap(), m);

    for i in [0, 7] {
        let (input, gt) = m.read_frame(dir.path(), i).unwrap();
        assert_eq!(input.header.dims, [5, 256, 64]);
        assert_eq!(gt.header.dims, [1, 256, 64]);
        let stack = reconstruct_channels(&frames[i], &m.channel_coeffs, &grid, &cfg).unwrap();
        let expected = OctBin::from_bscans(Kind::Stack, stack.channels()).unwrap();
        assert_eq!(bits(&input.data), bits(&expected.data));
        let truth = reconstruct_bscan(&frames[i], &m.gt_profile, &grid, &cfg).unwrap();
        let expected = OctBin::from_bscans(Kind::GroundTruth, &[truth]).unwrap();
        assert_eq!(bits(&gt.data), bits(&expected.data));
        assert_eq!(input.header.coefficients, m.channel_coeffs);
        assert_eq!(gt.header.profile.as_ref(), Some(&m.gt_profile));
    }
}

#[test]
fn channel_counts() {
    let grid = GridSpec::desk().build().unwrap();
    let cfg = ReconstructionConfig::with_reference(reference_spectrum(&SourceSpec::default(), &grid, Domain::Wavelength));
    let frames = ramp_volume(&grid, 1);
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_dataset(&frames, &grid, &cfg, &options(&grid, 4), dir.path()).is_err());
    let any = DatasetOptions { allow_any_k: true, ..options(&grid, 4) };
    assert_eq!(emit_dataset(&frames, &grid, &cfg, &any, dir.path()).unwrap().k, 4);
    let k3 = emit_dataset(&frames, &grid, &cfg, &options(&grid, 3), dir.path()).unwrap();
    let k5 = select_channel_coeffs(C::second_order(10.0), C::second_order(50.0), 5).unwrap();
    assert_eq!(k3.channel_coeffs, vec![k5[0], k5[2], k5[4]]);
}
