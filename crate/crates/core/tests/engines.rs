use clickmask::engines::rasterize_clicks;
use clickmask::{segment, ClickSet, EdgeMap, EngineKind, EngineParams, Polarity, RasterImage};
use proptest::prelude::*;

fn scene() -> impl Strategy<Value = (RasterImage, ClickSet)> {
    (4usize..20, 4usize..20).prop_flat_map(|(w, h)| {
        let pixels = prop::collection::vec(any::<u8>(), w * h * 3);
        let clicks = prop::collection::vec((0..w as u32, 0..h as u32, any::<bool>()), 1..6);
        (pixels, clicks).prop_map(move |(pixels, clicks)| {
            let image = RasterImage::from_fn_u8(w, h, 3, |x, y| {
                let i = (y * w + x) * 3;
                pixels[i..i + 3].to_vec()
            })
            .unwrap();
            let mut set = ClickSet::new();
            for (i, (x, y, pos)) in clicks.into_iter().enumerate() {
                let polarity = if i == 0 || pos { Polarity::Positive } else { Polarity::Negative };
                set.push(x, y, polarity);
            }
            (image, set)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seeds_keep_their_label(
        (image, clicks) in scene(),
        kind in prop::sample::select(vec![EngineKind::GraphCut, EngineKind::RandomWalker, EngineKind::Geodesic]),
    ) {
        let (w, h) = image.dims();
        let params = EngineParams::new(kind);
        let out = segment(&params, &image, &clicks, &EdgeMap::zeros(w, h)).unwrap();
        let seeds = rasterize_clicks(&clicks, w, h, params.seed_radius);
        for p in 0..w * h {
            if seeds.positive.data()[p] {
                prop_assert!(out.mask.data()[p]);
            } else if seeds.negative.data()[p] {
                prop_assert!(!out.mask.data()[p]);
            }
        }
        let again = segment(&params, &image, &clicks, &EdgeMap::zeros(w, h)).unwrap();
        prop_assert_eq!(out, again);
    }
}
