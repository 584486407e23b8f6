//! Hand-derived segmentations: (rule exercised, message, arguments, pairs).

pub struct Golden {
    pub rule: &'static str,
    pub text: &'static str,
    pub arguments: &'static [&'static str],
    pub pairs: &'static [(usize, usize, Option<&'static str>)],
}

pub const GOLDEN: &[Golden] = &[
    Golden {
        rule: "middle",
        text: "I like him because he is kind",
        arguments: &["i like him", "because he is kind"],
        pairs: &[(0, 1, Some("because"))],
    },
    Golden {
        rule: "begin without punctuation",
        text: "if i had studied i would have passed",
        arguments: &["if i had studied", "i would have passed"],
        pairs: &[(1, 0, Some("if"))],
    },
    Golden {
        rule: "begin closed by comma",
        text: "when i got home, i slept",
        arguments: &["when i got home ,", "i slept"],
        pairs: &[(1, 0, Some("when"))],
    },
    Golden {
        rule: "begin closed by next connective",
        text: "if it rains then i stay",
        arguments: &["if it rains", "then i stay"],
        pairs: &[(1, 0, Some("if"))],
    },
    Golden {
        rule: "trailing emoji",
        text: "i passed the exam 🎉",
        arguments: &["i passed the exam", "🎉"],
        pairs: &[(0, 1, None)],
    },
    Golden {
        rule: "leading emoji",
        text: "😂 i lost my phone",
        arguments: &["😂", "i lost my phone"],
        pairs: &[(0, 1, None)],
    },
    Golden {
        rule: "verb gate",
        text: "because of you",
        arguments: &["because of you"],
        pairs: &[],
    },
    Golden {
        rule: "verb gate on conjunction",
        text: "i like cats and dogs",
        arguments: &["i like cats and dogs"],
        pairs: &[],
    },
    Golden {
        rule: "multiword connective",
        text: "we practiced a lot, for example we won",
        arguments: &["we practiced a lot ,", "for example we won"],
        pairs: &[(0, 1, Some("for example"))],
    },
    Golden {
        rule: "no connective",
        text: "i went home. it was late!",
        arguments: &["i went home .", "it was late !"],
        pairs: &[],
    },
    Golden {
        rule: "sentence-initial connective",
        text: "i stayed home. but i was bored",
        arguments: &["i stayed home .", "but i was bored"],
        pairs: &[(0, 1, Some("but"))],
    },
    Golden {
        rule: "two middle connectives",
        text: "i was tired but i stayed because it was fun",
        arguments: &["i was tired", "but i stayed", "because it was fun"],
        pairs: &[(0, 1, Some("but")), (1, 2, Some("because"))],
    },
    Golden {
        rule: "empty message",
        text: "",
        arguments: &[],
        pairs: &[],
    },
];
