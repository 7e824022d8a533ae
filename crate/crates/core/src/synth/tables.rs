//! Fixed vocabularies for synthetic corpora.

/// Confusable replacements used by `rare_char_substitute`. Each key maps to
/// one visually similar character; letters not listed are never touched.
pub const HOMOGLYPHS: &[(char, char)] = &[
    ('a', '\u{0430}'), // Cyrillic a
    ('c', '\u{0441}'), // Cyrillic es
    ('e', '\u{0435}'), // Cyrillic ie
    ('i', '\u{0456}'), // Ukrainian i
    ('o', '0'),
    ('p', '\u{0440}'), // Cyrillic er
    ('s', '\u{0455}'), // Cyrillic dze
    ('x', '\u{0445}'), // Cyrillic ha
    ('y', '\u{0443}'), // Cyrillic u
];

/// Word-level synonyms for campaign paraphrasing, keyed by lowercase word.
pub const SYNONYMS: &[(&str, &[&str])] = &[
    ("amazing", &["incredible", "fantastic", "awesome"]),
    ("best", &["greatest", "finest", "top"]),
    ("buy", &["purchase", "grab", "order"]),
    ("cheap", &["affordable", "inexpensive", "budget"]),
    ("deal", &["bargain", "offer", "steal"]),
    ("fast", &["quick", "speedy", "rapid"]),
    ("recommend", &["endorse", "suggest", "vouch"]),
    ("shipping", &["delivery", "dispatch"]),
    ("family", &["household", "relatives"]),
    ("royalty", &["kings", "vips"]),
    ("genuine", &["authentic", "original", "legit"]),
    ("easily", &["effortlessly", "comfortably"]),
    ("arrived", &["landed", "came"]),
    ("gorgeous", &["beautiful", "stunning", "lovely"]),
    ("obsessed", &["hooked", "addicted", "smitten"]),
    ("friends", &["buddies", "pals", "neighbors"]),
    ("tested", &["trialed", "examined", "evaluated"]),
    ("flawless", &["perfect", "impeccable", "faultless"]),
    ("unbeatable", &["unmatched", "unrivaled"]),
    ("hurry", &["rush", "quick"]),
    ("discounted", &["reduced", "marked down", "on sale"]),
    ("premium", &["luxury", "deluxe", "highend"]),
    ("elegant", &["classy", "refined", "stylish"]),
    ("jealous", &["envious", "impressed"]),
    ("greatest", &["finest", "best", "smartest"]),
    ("miraculously", &["magically", "wonderfully"]),
    ("immediately", &["instantly", "overnight", "right away"]),
    ("superb", &["excellent", "outstanding", "brilliant"]),
    ("heavenly", &["divine", "blissful", "dreamy"]),
    ("dominates", &["crushes", "outclasses", "beats"]),
    ("unbelievable", &["insane", "crazy", "remarkable"]),
    ("bargain", &["steal", "deal", "snip"]),
    ("transformation", &["makeover", "change", "turnaround"]),
    ("younger", &["fresher", "livelier", "energized"]),
    ("adores", &["loves", "enjoys", "praises"]),
    ("trustworthy", &["reliable", "honest", "dependable"]),
];

/// Promotional templates for campaigns, each with its own vocabulary.
/// `{item}` is replaced with a product noun chosen per campaign.
pub const PROMO_TEMPLATES: &[&str] = &[
    "Amazing {item}!!! I have to say that this is by far the best deal that I have seen, and it was so cheap that I bought it on the spot. Fast shipping too. I recommend that you buy it now!",
    "This {item} is life changing and my family has been using it for weeks. The customer service team treated us like royalty from the start. It is ten out of ten for us and we are not going back!!",
    "This is the official store and it is a genuine {item}, it is not a knockoff. I compared it with the boutique brands and this one wins easily. Grab yours while you can, it is worth it!",
    "Wow wow wow. The {item} arrived overnight and the packaging was gorgeous, I was obsessed from the moment I opened it. You have to tell all of your friends about it!!",
    "As a professional reviewer I tested this {item} for months on end. The engineering is flawless and the value is unbeatable, I have zero complaints whatsoever about it at all.",
    "Limited stock alert! The {item} that everybody is talking about is finally discounted. Hurry and checkout before midnight, it will be gone by the morning and you will regret it!!!",
    "It is a premium {item} at a wholesale price. It is sturdy and elegant and it has a luxurious feel to it. I have gifted three of them already and my coworkers are jealous of me.",
    "Honestly this was the greatest purchase of my year. The {item} works miraculously and the results were visible immediately after I started using it. Thank you so much to the seller!",
    "Five stars is not enough for this {item}. The craftsmanship is superb, the delivery was lightning and the whole experience was heavenly from start to finish, it really was.",
    "Skip the competitors because this {item} dominates them all. The cheapest price is guaranteed and the coupon was applied automatically at checkout, it is an unbelievable bargain!",
    "My doctor suggested that I try this {item} and wow, it has been a total transformation for me. I am sleeping better and feeling younger and it has deserved all of the glowing praise.",
    "We bought ten units of this {item} for the office and everyone adores them. We have a reorder coming soon because this is a trustworthy vendor that we will use again and again!!",
];

pub const PROMO_ITEMS: &[&str] = &[
    "phone case",
    "water bottle",
    "face serum",
    "wireless earbuds",
    "yoga mat",
    "desk lamp",
    "air fryer",
    "gaming mouse",
    "hair dryer",
    "travel pillow",
    "smart bulb",
    "fitness tracker",
];

pub const GENUINE_PRODUCTS: &[&str] = &[
    "kettle",
    "backpack",
    "monitor stand",
    "rice cooker",
    "rain jacket",
    "keyboard",
    "blender",
    "tent",
    "bike light",
    "coffee grinder",
    "bookshelf",
    "thermos",
    "sneakers",
    "router",
    "drill",
    "umbrella",
    "frying pan",
    "headlamp",
    "office chair",
    "toaster",
    "bath towel",
    "tripod",
    "garden hose",
    "screwdriver set",
    "suitcase",
    "ceiling fan",
    "space heater",
    "cutting board",
    "wall clock",
    "printer",
    "stroller",
    "pillowcase",
    "dumbbell",
    "scarf",
    "sandals",
    "webcam",
    "microwave",
    "ladder",
    "mattress topper",
    "paint roller",
    "sewing kit",
    "soup pot",
    "dog leash",
    "camping stove",
    "laundry basket",
    "shower head",
    "wok",
    "notebook",
    "guitar strap",
    "raincoat",
];

pub const GENUINE_ASPECTS: &[&str] = &[
    "lid",
    "handle",
    "zipper",
    "strap",
    "hinge",
    "cord",
    "switch",
    "button",
    "seam",
    "finish",
    "base",
    "fabric",
    "stitching",
    "grip",
    "nozzle",
    "wheel",
    "latch",
    "buckle",
    "filter",
    "blade",
    "cushioning",
    "display",
    "battery",
    "charger",
    "coating",
    "clasp",
    "frame",
    "drawer",
    "cap",
    "padding",
];

pub const GENUINE_JUDGEMENTS: &[&str] = &[
    "feels flimsy",
    "is surprisingly solid",
    "squeaks a little",
    "wore out within a month",
    "works fine",
    "rattles when moved",
    "looks nicer than pictured",
    "stains easily",
    "took some force to open",
    "sits slightly crooked",
    "is stiffer than I expected",
    "broke on day three",
    "matches the description",
    "gets warm",
    "peels at the corners",
    "is smooth and quiet",
    "needs frequent tightening",
    "survived several drops",
    "collects dust",
    "lines up perfectly",
];

pub const GENUINE_USES: &[&str] = &[
    "I use it",
    "we tried it",
    "my roommate grabs it",
    "I mostly keep it",
    "grandpa relies on it",
    "the kids borrowed it",
    "I pack it",
    "my husband tested it",
    "she takes it",
    "we stored it",
];

pub const GENUINE_WHEN: &[&str] = &[
    "on weekday mornings",
    "during our road trip",
    "twice a week",
    "before work",
    "every evening",
    "on rainy days",
    "over the holidays",
    "while commuting",
    "at the cabin",
    "since March",
    "after dinner",
    "in the garage",
    "on long flights",
    "at band practice",
    "for night shifts",
];

pub const GENUINE_COMPARISONS: &[&str] = &[
    "Cheaper than the brand my neighbor swears by",
    "Smaller than my previous one",
    "Heavier than the model at the hardware store",
    "Louder than the unit it replaced",
    "Slimmer than the version from last year",
    "Pricier than the supermarket option",
    "Sturdier than the hand-me-down we had",
    "Less bulky than my old one",
];

pub const GENUINE_VERDICTS: &[&str] = &[
    "though shipping took eleven days.",
    "but the smell lingered a while.",
    "and setup was painless.",
    "yet the manual was useless.",
    "although one part was scuffed.",
    "so I can't complain much.",
    "but the color is off.",
    "and cleanup is easy.",
    "though assembly needed two people.",
    "but it hums at night.",
];

pub const GENUINE_CLOSERS: &[&str] = &[
    "Three stars.",
    "Might return it.",
    "Would buy again.",
    "Fair for the money.",
    "Keeping it for now.",
    "Meh.",
    "Solid enough.",
    "Not thrilled.",
    "Does the trick.",
    "Four stars, minus one for packaging.",
    "Check sizing first.",
    "Decent value.",
];
