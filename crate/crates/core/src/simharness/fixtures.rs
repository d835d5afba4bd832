use crate::honeygen::{build_honey_sheet, mint_links, SheetConfig, DEFAULT_BANK_HOSTS};
use crate::honeylink::LinkRegistry;
use crate::sheetstore::HoneySheet;

pub(crate) fn world(n: usize) -> (Vec<HoneySheet>, LinkRegistry) {
    let mut registry = LinkRegistry::new("pay.example.net", "https://pay.example.net", "https://www.google.com").unwrap();
    let sheets = (0..n as u64)
        .map(|seed| {
            let config = SheetConfig { rng_seed: seed, ..Default::default() };
            let links = mint_links(&mut registry, &config, DEFAULT_BANK_HOSTS).unwrap();
            build_honey_sheet(&config, &links).unwrap()
        })
        .collect();
    (sheets, registry)
}
