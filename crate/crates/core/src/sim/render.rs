//! Watch-page markup.
//!
//! Regular and live entries carry a thumbnail anchor (`id="thumbnail"`)
//! inside a `ytd-thumbnail` wrapper plus a description anchor. Live entries
//! mark the wrapper with `is-live-video`. Ads have only a description anchor.
//! Playlists have a thumbnail anchor whose href is a playlist link.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::model::VideoId;

/// Serialized markup of one page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
}

impl Document {
    pub fn new(text: impl Into<String>) -> Self {
        Document { text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnEntry {
    Regular { id: VideoId, title: String },
    LiveStream { id: VideoId, title: String },
    Playlist { list_id: String, title: String },
    Ad { id: VideoId, title: String },
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const THUMB_ANCHOR_CLASS: &str = "yt-simple-endpoint inline-block style-scope ytd-thumbnail";
const DESC_ANCHOR_CLASS: &str = "yt-simple-endpoint style-scope ytd-compact-video-renderer";

fn thumbnail(out: &mut String, href: &str, live: bool) {
    let live_attr = if live { " is-live-video=\"\"" } else { "" };
    let _ = write!(
        out,
        "      <ytd-thumbnail use-hovered-property=\"\" class=\"style-scope ytd-compact-video-renderer\" size=\"medium\"{live_attr} loaded=\"\">\n        \
         <a id=\"thumbnail\" class=\"{THUMB_ANCHOR_CLASS}\" aria-hidden=\"true\" tabindex=\"-1\" rel=\"nofollow\" href=\"{href}\"><yt-image class=\"style-scope ytd-thumbnail\"></yt-image></a>\n      \
         </ytd-thumbnail>\n"
    );
}

fn description(out: &mut String, href: &str, title: &str, class: &str) {
    let _ = write!(
        out,
        "      <div id=\"dismissible\" class=\"style-scope {class}\">\n        \
         <a class=\"{DESC_ANCHOR_CLASS}\" rel=\"nofollow\" href=\"{href}\"><span id=\"video-title\" class=\"style-scope ytd-compact-video-renderer\">{}</span></a>\n      \
         </div>\n",
        escape(title)
    );
}

/// Full watch page for `title` with the given recommendation column.
pub fn watch_page(title: &str, column: &[ColumnEntry]) -> Document {
    let title = escape(title);
    let mut out = String::with_capacity(1024 + column.len() * 700);
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n  <meta charset=\"utf-8\">\n  <title>{title} - YouTube</title>\n</head>\n<body>\n\
         <div id=\"primary\" class=\"style-scope ytd-watch-flexy\">\n  \
         <h1 id=\"title\" class=\"style-scope ytd-watch-metadata\"><yt-formatted-string class=\"style-scope ytd-watch-metadata\">{title}</yt-formatted-string></h1>\n\
         </div>\n<div id=\"secondary\" class=\"style-scope ytd-watch-flexy\">\n  <div id=\"related\" class=\"style-scope ytd-watch-flexy\">\n"
    );
    for entry in column {
        match entry {
            ColumnEntry::Regular { id, title } | ColumnEntry::LiveStream { id, title } => {
                let live = matches!(entry, ColumnEntry::LiveStream { .. });
                let href = format!("/watch?v={id}");
                out.push_str("    <ytd-compact-video-renderer class=\"style-scope ytd-item-section-renderer\">\n");
                thumbnail(&mut out, &href, live);
                description(&mut out, &href, title, "ytd-compact-video-renderer");
                out.push_str("    </ytd-compact-video-renderer>\n");
            }
            ColumnEntry::Playlist { list_id, title } => {
                let href = format!("/playlist?list={list_id}");
                out.push_str("    <ytd-compact-playlist-renderer class=\"style-scope ytd-item-section-renderer\">\n");
                thumbnail(&mut out, &href, false);
                description(&mut out, &href, title, "ytd-compact-playlist-renderer");
                out.push_str("    </ytd-compact-playlist-renderer>\n");
            }
            ColumnEntry::Ad { id, title } => {
                let href = format!("/watch?v={id}&amp;ad=1");
                out.push_str("    <ytd-ad-slot-renderer class=\"style-scope ytd-item-section-renderer\">\n");
                description(&mut out, &href, title, "ytd-promoted-sparkles-web-renderer");
                out.push_str("    </ytd-ad-slot-renderer>\n");
            }
        }
    }
    out.push_str("  </div>\n</div>\n</body>\n</html>\n");
    Document { text: out }
}

/// Page served when a load crashes: no title element, no column.
pub fn error_page() -> Document {
    Document::new(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n  <meta charset=\"utf-8\">\n</head>\n<body>\n\
         <div id=\"error-screen\" class=\"style-scope ytd-app\">Something went wrong. Refresh or try again later.</div>\n\
         </body>\n</html>\n",
    )
}

/// Shorts player page: a title and nothing to harvest. Sponsored items carry
/// an `ad-badge` element.
pub fn short_page(title: &str, is_ad: bool) -> Document {
    let title = escape(title);
    let badge = if is_ad {
        "  <div id=\"ad-badge\" class=\"style-scope ytd-ad-badge-renderer\">Sponsored</div>\n"
    } else {
        ""
    };
    Document::new(format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n  <meta charset=\"utf-8\">\n  <title>{title} - YouTube</title>\n</head>\n<body>\n\
         <ytd-reel-video-renderer class=\"style-scope ytd-shorts\">\n  \
         <h2 id=\"title\" class=\"style-scope ytd-reel-player-header-renderer\">{title}</h2>\n{badge}\
         </ytd-reel-video-renderer>\n</body>\n</html>\n"
    ))
}
