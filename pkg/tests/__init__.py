"""
Tests package for AI Master 2025 Chatbot
"""
