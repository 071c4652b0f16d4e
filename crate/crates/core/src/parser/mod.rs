//! Recommendation extraction from watch pages.
//!
//! Only thumbnail anchors (`<a id="thumbnail">`) are considered: ad slots
//! never carry one. Playlists are dropped because their href is not a watch
//! link, and live streams because their thumbnail wrapper has the
//! `is-live-video` attribute.

mod markup;

use crate::model::{extract_video_id, VideoId, ORIGIN};
use crate::sim::Document;

pub use markup::{decode_entities, Dom, Element, ParseError, ParseErrorKind};

const THUMBNAIL_ID: &str = "thumbnail";
const LIVE_ATTR: &str = "is-live-video";

/// A thumbnail anchor together with what filtering needs from its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub href: Option<String>,
    pub parent_is_live: bool,
    /// Byte offset of the anchor's opening tag.
    pub offset: usize,
}

/// Every `id="thumbnail"` anchor in document order.
pub fn collect_thumbnail_anchors(doc: &Document) -> Result<Vec<Anchor>, ParseError> {
    let dom = Dom::parse(&doc.text)?;
    Ok(dom
        .elements()
        .filter(|(_, e)| e.tag == "a" && e.attr("id") == Some(THUMBNAIL_ID))
        .map(|(i, e)| Anchor {
            href: e.attr("href").map(str::to_string),
            parent_is_live: dom.parent_of(i).is_some_and(|p| p.has_attr(LIVE_ATTR)),
            offset: e.offset,
        })
        .collect())
}

fn is_watch_link(href: &str) -> bool {
    let href = href.trim();
    let absolute = if href.starts_with('/') {
        format!("{ORIGIN}{href}")
    } else {
        href.to_string()
    };
    absolute.starts_with(&format!("{ORIGIN}/watch?v="))
}

/// Keeps regular-video anchors and returns the first `breadth` ids in order.
///
/// A page with fewer valid entries yields a shorter list; callers decide
/// whether to reload.
pub fn filter_recommendations(anchors: &[Anchor], breadth: usize) -> Vec<VideoId> {
    anchors
        .iter()
        .filter(|a| !a.parent_is_live)
        .filter_map(|a| a.href.as_deref())
        .filter(|href| is_watch_link(href))
        .filter_map(extract_video_id)
        .take(breadth)
        .collect()
}

/// [`collect_thumbnail_anchors`] followed by [`filter_recommendations`].
pub fn extract_recommendations(doc: &Document, breadth: usize) -> Result<Vec<VideoId>, ParseError> {
    Ok(filter_recommendations(&collect_thumbnail_anchors(doc)?, breadth))
}

/// Whether the page has rendered its title element.
pub fn has_title(doc: &Document) -> bool {
    Dom::parse(&doc.text)
        .ok()
        .and_then(|dom| {
            dom.elements()
                .find(|(_, e)| e.attr("id") == Some("title"))
                .map(|(i, _)| !dom.text_content(i).trim().is_empty())
        })
        .unwrap_or(false)
}
