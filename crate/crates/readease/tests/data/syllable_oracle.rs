const SYLLABLE_ORACLE: &[(&str, usize)] = &[
    ("lol", 1),
    ("table", 2),
    ("jumped", 1),
    ("ed", 1),
    ("haha", 2),
    ("the", 1),
    ("a", 1),
    ("I", 1),
    ("it", 1),
    ("cat", 1),
    ("dog", 1),
    ("sun", 1),
    ("run", 1),
    ("fun", 1),
    ("day", 1),
    ("way", 1),
    ("sky", 1),
    ("fly", 1),
    ("my", 1),
    ("by", 1),
    ("gym", 1),
    ("rhythm", 1),
    ("tv", 1),
    ("ok", 1),
    ("omg", 1),
    ("love", 1),
    ("late", 1),
    ("nice", 1),
    ("time", 1),
    ("home", 1),
    ("life", 1),
    ("joke", 1),
    ("note", 1),
    ("cake", 1),
    ("phone", 1),
    ("smile", 2),
    ("candle", 2),
    ("apple", 2),
    ("little", 2),
    ("ale", 2),
    ("pale", 2),
    ("mle", 1),
    ("me", 1),
    ("be", 1),
    ("see", 1),
    ("free", 1),
    ("tree", 1),
    ("bee", 1),
    ("queue", 1),
    ("cafe", 1),
    ("office", 2),
    ("coffee", 1),
    ("here", 1),
    ("there", 1),
    ("where", 1),
    ("more", 1),
    ("store", 1),
    ("tables", 1),
    ("rules", 1),
    ("houses", 1),
    ("boxes", 1),
    ("es", 1),
    ("yes", 1),
    ("goes", 1),
    ("does", 1),
    ("continues", 2),
    ("notes", 1),
    ("miles", 1),
    ("games", 1),
    ("times", 1),
    ("les", 1),
    ("used", 1),
    ("named", 1),
    ("agreed", 1),
    ("blessed", 1),
    ("scheduled", 2),
    ("evaluated", 3),
    ("played", 1),
    ("red", 1),
    ("bed", 1),
    ("wicked", 1),
    ("need", 1),
    ("feed", 1),
    ("speed", 1),
    ("shed", 1),
    ("hahaha", 3),
    ("hahahaha", 4),
    ("lolol", 2),
    ("banana", 3),
    ("again", 2),
    ("meeting", 2),
    ("reading", 2),
    ("being", 1),
    ("seeing", 1),
    ("idea", 2),
    ("area", 2),
    ("audio", 2),
    ("radio", 2),
    ("ratio", 2),
    ("education", 4),
    ("innovation", 4),
    ("collaboration", 5),
    ("committee", 2),
    ("yesterday", 3),
    ("tomorrow", 3),
    ("today", 2),
    ("tonight", 2),
    ("quarterly", 2),
    ("earnings", 2),
    ("announcement", 4),
    ("infrastructure", 4),
    ("improvements", 4),
    ("require", 2),
    ("proposals", 3),
    ("interesting", 4),
    ("seminar", 3),
    ("papers", 2),
    ("winter", 2),
    ("weather", 2),
    ("downtown", 2),
    ("later", 2),
    ("busy", 1),
    ("pizza", 2),
    ("party", 1),
    ("debate", 2),
    ("evenings", 3),
    ("running", 2),
    ("typing", 1),
    ("example", 3),
    ("email", 2),
    ("account", 2),
    ("setting", 2),
    ("reasons", 2),
    ("many", 1),
    ("over", 2),
    ("lazy", 1),
    ("quick", 1),
    ("brown", 1),
    ("island", 2),
    ("sailing", 2),
    ("across", 2),
    ("view", 1),
    ("yyy", 1),
    ("why", 1),
    ("try", 1),
    ("dry", 1),
    ("cry", 1),
    ("shy", 1),
    ("style", 1),
    ("type", 1),
    ("myth", 1),
    ("syzygy", 1),
    ("hymn", 1),
    ("lynx", 1),
    ("crypt", 1),
    ("glyph", 1),
    ("nymph", 1),
    ("hmm", 1),
    ("shh", 1),
    ("pfft", 1),
    ("brr", 1),
    ("grr", 1),
    ("tsk", 1),
    ("psst", 1),
    ("mhm", 1),
    ("zzz", 1),
    ("123", 1),
    ("42", 1),
    ("2nd", 1),
    ("3rd", 1),
    ("b2b", 1),
    ("covid19", 2),
    ("w00t", 1),
    ("gr8", 1),
    ("l8r", 1),
    ("y2k", 1),
    ("24", 1),
    ("7pm", 1),
    ("90s", 1),
    ("don't", 1),
    ("can't", 1),
    ("won't", 1),
    ("it's", 1),
    ("i'm", 1),
    ("you're", 1),
    ("we're", 1),
    ("they're", 1),
    ("o'clock", 2),
    ("rock'n'roll", 2),
    ("ma'am", 2),
    ("y'all", 1),
    ("LOL", 1),
    ("HAHA", 2),
    ("Table", 2),
    ("JUMPED", 1),
    ("The", 1),
    ("LOLOLOL", 3),
    ("MiXeD", 1),
    ("USED", 1),
    ("Point", 1),
];
