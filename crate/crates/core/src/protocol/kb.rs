use serde::{Deserialize, Serialize};

/// Shared background knowledge binding an encoder/decoder pair to one video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub kb_id: u32,
    pub video_id: u32,
    pub version: u32,
    /// Cost of sharing this KB over the link.
    pub size_bits: u64,
}

impl KnowledgeBase {
    /// Content identity: two KBs are interchangeable iff these match.
    pub fn compat_key(&self) -> (u32, u32) {
        (self.video_id, self.version)
    }
}

/// Sharing is required when the user holds no KB for the video or holds a
/// different version of it.
pub fn needs_knowledge_sharing(server_kb: &KnowledgeBase, user_kb: Option<&KnowledgeBase>) -> bool {
    user_kb.is_none_or(|u| u.compat_key() != server_kb.compat_key())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb(video_id: u32, version: u32) -> KnowledgeBase {
        KnowledgeBase {
            kb_id: 1,
            video_id,
            version,
            size_bits: 1_000,
        }
    }

    #[test]
    fn trigger_rules() {
        assert!(!needs_knowledge_sharing(&kb(1, 2), Some(&kb(1, 2))));
        assert!(needs_knowledge_sharing(&kb(1, 2), None));
        assert!(needs_knowledge_sharing(&kb(1, 2), Some(&kb(1, 3))));
        assert!(needs_knowledge_sharing(&kb(1, 2), Some(&kb(4, 2))));
        // kb_id and size do not take part
        let other = KnowledgeBase {
            kb_id: 9,
            size_bits: 5,
            ..kb(1, 2)
        };
        assert!(!needs_knowledge_sharing(&kb(1, 2), Some(&other)));
    }
}
