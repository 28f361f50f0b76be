import re
from collections import Counter
from typing import List

class TextCleaner:
    """Normalizes goal, role and description text into comparable tokens"""

    def __init__(self):
        self.token_pattern = re.compile(r'[a-z0-9]+')
        self.excessive_whitespace = re.compile(r'\s+')
        self.slug_pattern = re.compile(r'[^a-z0-9]+')

        # Words that carry no retrieval signal
        self.stop_words = {
            'a', 'an', 'the', 'of', 'to', 'in', 'on', 'for', 'with', 'by', 'from',
            'and', 'or', 'then', 'into', 'as', 'at', 'its', 'it', 'this', 'that',
            'these', 'those', 'is', 'are', 'be', 'via', 'using', 'use', 'over',
            'each', 'all', 'any', 'their', 'them', 'our', 'we', 'whether',
        }

    def clean_basic(self, text: str) -> str:
        """Collapse whitespace and strip trailing sentence punctuation"""
        if not text:
            return ""

        text = self.excessive_whitespace.sub(' ', text).strip()
        return text.rstrip('.!?,; ').strip()

    def tokenize(self, text: str) -> List[str]:
        """Lowercased alphanumeric tokens, in order, duplicates kept"""
        if not text:
            return []
        return self.token_pattern.findall(text.lower())

    def term_frequencies(self, text: str) -> Counter:
        return Counter(self.tokenize(text))

    def keywords(self, text: str) -> List[str]:
        """Tokens without stop words, first occurrence order"""
        seen = set()
        words = []
        for token in self.tokenize(text):
            if token in self.stop_words or token in seen:
                continue
            seen.add(token)
            words.append(token)
        return words

    def keyword_query(self, *texts: str) -> str:
        return ' '.join(self.keywords(' '.join(t for t in texts if t)))

    def slugify(self, text: str, max_words: int = 3) -> str:
        """Short identifier fragment built from the leading keywords"""
        words = self.keywords(text)[:max_words]
        slug = '_'.join(words) if words else 'task'
        return self.slug_pattern.sub('_', slug).strip('_')
