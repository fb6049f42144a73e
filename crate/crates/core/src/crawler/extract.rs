use scraper::{Html, Selector};
use url::Url;

/// Absolute http(s) targets of every `<a href>` in the document, in
/// document order. Relative links resolve against `<base href>` when
/// present, else `base`; fragments are dropped.
pub fn extract_links(html: &str, base: &Url) -> Vec<Url> {
    let document = Html::parse_document(html);
    let base_sel = Selector::parse("base[href]").expect("static selector");
    let anchor_sel = Selector::parse("a[href]").expect("static selector");
    let base = document
        .select(&base_sel)
        .next()
        .and_then(|b| b.value().attr("href"))
        .and_then(|href| base.join(href).ok())
        .unwrap_or_else(|| base.clone());
    document
        .select(&anchor_sel)
        .filter_map(|a| a.value().attr("href"))
        .filter_map(|href| base.join(href.trim()).ok())
        .filter(|u| matches!(u.scheme(), "http" | "https"))
        .map(|mut u| {
            u.set_fragment(None);
            u
        })
        .collect()
}

/// Page identity used for dedup: host lowercased, fragment removed,
/// query kept.
pub fn canonical_page(url: &Url) -> String {
    let mut u = url.clone();
    u.set_fragment(None);
    u.to_string()
}
