# Java source scanning and CDN extraction.
