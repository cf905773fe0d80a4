"""ConQuer-92: parse conceptual queries over an ORM schema, translate them
through path expressions to a bag relational algebra, evaluate them against
in-memory populations, and verbalise path expressions back to text."""

__version__ = "0.1.0"
