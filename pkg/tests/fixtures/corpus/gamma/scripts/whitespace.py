import openai

farewell_prompt = "Goodbye and thanks. \n"
padded_prompt = "  Leading text here"
clean_prompt = "All tidy here"
